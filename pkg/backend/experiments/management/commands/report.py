from django.core.management.base import CommandError
from rest_framework.renderers import JSONRenderer

from experiments.base import EXIT_USAGE, LabCommand
from experiments.models import ExperimentRun
from experiments.output import write_output
from experiments.serializers import ExperimentRunSerializer


class Command(LabCommand):
    help = 'List recorded runs with their estimates (newest first).'
    required_fields = ()

    def add_lab_arguments(self, parser):
        parser.add_argument('--limit', type=int, help='number of runs (default 20)')
        parser.add_argument('--run', type=int, help='show a single run by id')

    def handle(self, *args, **options):
        config = self.load_config(options)
        runs = ExperimentRun.objects.prefetch_related('estimates')
        if config.get('run'):
            runs = runs.filter(pk=config['run'])
            if not runs.exists():
                raise CommandError(f"Run {config['run']} does not exist.", returncode=EXIT_USAGE)
        runs = runs[:config.get('limit', 20)]

        if config['format'] == 'json':
            data = ExperimentRunSerializer(runs, many=True).data
            text = JSONRenderer().render(data, renderer_context={'indent': 2}).decode() + '\n'
        else:
            lines = []
            for run in runs:
                wall = f'{run.wall_time:.2f}s' if run.wall_time is not None else '-'
                lines.append(f'#{run.pk} {run.command} seed={run.seed} {run.get_status_display()} '
                             f'exit={run.exit_code} wall={wall} {run.created_at:%Y-%m-%d %H:%M}')
                for record in run.estimates.all():
                    stderr = f' +- {record.stderr:.6g}' if record.stderr is not None else ''
                    target = f' (target {record.target:.6g})' if record.target is not None else ''
                    lines.append(f'    {record.label} {record.estimator} = {record.mean:.6g}{stderr}{target}')
            text = '\n'.join(lines) + '\n' if lines else 'No recorded runs.\n'

        if config.get('out'):
            write_output(config['out'], text)
        else:
            self.stdout.write(text, ending='')
