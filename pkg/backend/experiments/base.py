"""Shared plumbing of the lab management commands.

Exit codes: 0 success, 1 usage or validation error, 2 failed check or runtime
error, 3 node or population cap exceeded.
"""
from __future__ import annotations

import sys
import time

from django.conf import settings
from django.core.exceptions import ValidationError as DjangoValidationError
from django.core.management.base import BaseCommand, CommandError, CommandParser

from gwlab import __version__
from gwlab.exceptions import LabError
from .config import merge_config, read_config_file
from .models import EstimateRecord, ExperimentRun
from .output import EstimateRow, LabResult, render_csv, render_json, write_output, write_sidecar
from .serializers import RunConfigSerializer

EXIT_USAGE = 1
EXIT_CHECK = 2

DJANGO_OPTIONS = {
    'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks', 'config',
}


class LabParser(CommandParser):
    """argparse reserves status 2 for usage errors; here 2 means a failed check."""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')
        raise CommandError(f'Error: {message}', returncode=EXIT_USAGE)


def _format_errors(errors) -> str:
    parts = []
    for name, messages in errors.items():
        if isinstance(messages, dict):
            messages = [f'{k}: {v}' for k, v in messages.items()]
        parts.append(f"{name}: {' '.join(str(m) for m in messages)}")
    return '; '.join(parts)


class LabCommand(BaseCommand):
    """Parses flags, validates the run config, records the run and writes outputs.

    Subclasses implement ``add_lab_arguments`` and ``run_experiment``.
    """
    required_fields = ('dist',)
    checks = ()

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = LabParser
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value file; flags override it')
        parser.add_argument('--dist', help='offspring law, e.g. "2:0.5,3:0.5"')
        parser.add_argument('--seed', type=int, help='master seed (default: GWER_SEED or 0)')
        parser.add_argument('--parallelism', type=int, help='worker processes')
        parser.add_argument('--out', help='output file (default: stdout)')
        parser.add_argument('--format', choices=RunConfigSerializer.FORMAT_CHOICES)
        if self.checks:
            parser.add_argument('--check', choices=self.checks, help='which check to run')
        self.add_lab_arguments(parser)

    def add_lab_arguments(self, parser):
        pass

    def run_experiment(self, config) -> LabResult:
        raise NotImplementedError

    def load_config(self, options) -> dict:
        flags = {key: value for key, value in options.items() if key not in DJANGO_OPTIONS}
        try:
            file_values = read_config_file(options['config']) if options.get('config') else {}
        except DjangoValidationError as exc:
            raise CommandError(' '.join(exc.messages), returncode=EXIT_USAGE)
        serializer = RunConfigSerializer(
            data=merge_config(file_values, flags),
            context={'required': self.required_fields, 'checks': self.checks},
        )
        if not serializer.is_valid():
            raise CommandError(f'Invalid configuration: {_format_errors(serializer.errors)}',
                               returncode=EXIT_USAGE)
        config = dict(serializer.validated_data)
        if self.checks:
            config.setdefault('check', self.checks[0])
        self.validate_config(config)
        return config

    def validate_config(self, config):
        """Cross-field checks of one command; raise CommandError with EXIT_USAGE."""

    def handle(self, *args, **options):
        config = self.load_config(options)
        command = self.command_name()
        run = None
        if settings.GWLAB['RECORD_RUNS']:
            run = ExperimentRun.objects.create(
                command=command,
                config=RunConfigSerializer.echo(config),
                seed=config['seed'],
                version=__version__,
                output_path=config.get('out', ''),
            )
        started = time.perf_counter()
        try:
            result = self.run_experiment(config)
        except LabError as exc:
            if run is not None:
                run.finish(exc.exit_code, time.perf_counter() - started, str(exc))
            raise CommandError(str(exc), returncode=exc.exit_code)
        wall_time = time.perf_counter() - started

        render = render_json if config['format'] == 'json' else render_csv
        text = render(command, __version__, config, result)
        if config.get('out'):
            path = write_output(config['out'], text)
            write_sidecar(path, wall_time, run.pk if run else None)
        else:
            self.stdout.write(text, ending='')

        exit_code = 0 if result.passed else EXIT_CHECK
        if run is not None:
            EstimateRecord.objects.bulk_create([
                EstimateRecord(run=run, **data) for data in map(EstimateRow.as_dict, result.rows) if data['mean'] is not None
            ])
            run.finish(exit_code, wall_time, result.summary)
        if not result.passed:
            raise CommandError(f'Check failed: {result.summary}', returncode=EXIT_CHECK)
        if result.summary:
            self.stderr.write(self.style.SUCCESS(result.summary))

    def command_name(self) -> str:
        return self.__module__.rsplit('.', 1)[-1]
