import math

from django.core.management.base import CommandError

from experiments.base import EXIT_USAGE, LabCommand
from experiments.output import LabResult
from montecarlo.rng import RngStream, stream_label
from trees.arena import MeasureKind, TreeArena
from walks.engine import StopRule, TimeMode, run, write_trace
from walks.estimators import estimate_hitting_times, estimate_velocity

MODES = {
    'mean': (TimeMode.MEAN_TIME,),
    'exact': (TimeMode.EXACT_TIME,),
    'both': (TimeMode.MEAN_TIME, TimeMode.EXACT_TIME),
}


class Command(LabCommand):
    help = (
        'Velocity v_α = lim ρ(X_t)/t per α in either time mode; optional τ_n/n per level (α > 0) '
        'against 1/v_α and a trace of one walk ("jump_index,time,rho,node_degree"). '
        'Fails when a velocity sign disagrees with the sign of α. '
        'Columns: label,alpha,estimator,mean,stderr,n,target.'
    )
    required_fields = ('dist', 'alphas')

    def add_lab_arguments(self, parser):
        parser.add_argument('--alphas', help='comma separated bias values')
        parser.add_argument('--replicas', type=int)
        parser.add_argument('--horizon', type=float)
        parser.add_argument('--mode', choices=sorted(MODES))
        parser.add_argument('--levels', help='comma separated levels for hitting times')
        parser.add_argument('--trace', help='CSV path for the trace of one walk at the first α')

    def validate_config(self, config):
        if any(level < 1 for level in config.get('levels', ())):
            raise CommandError('hitting levels must be >= 1.', returncode=EXIT_USAGE)

    def run_experiment(self, config):
        dist = config['dist']
        seed, parallelism = config['seed'], config['parallelism']
        horizon, replicas = config.get('horizon'), config.get('replicas')
        result = LabResult()
        wrong_sign = []
        for alpha in config['alphas']:
            for mode in MODES[config.get('mode', 'mean')]:
                v = estimate_velocity(dist, alpha, horizon, replicas, seed, parallelism, mode=mode)
                result.add(f'alpha={alpha!r}', f'v_{mode.lower()}', v, alpha)
                if alpha != 0 and math.copysign(1.0, v.mean) != math.copysign(1.0, alpha):
                    wrong_sign.append(alpha)
            if alpha > 0 and config.get('levels'):
                hits = estimate_hitting_times(dist, alpha, config['levels'], replicas, seed, parallelism)
                for level, tau in hits.items():
                    result.add(f'alpha={alpha!r},n={level}', 'tau_over_n', tau, alpha, 1.0 / v.mean)

        if config.get('trace'):
            alpha = config['alphas'][0]
            source = RngStream(seed, 0, (stream_label('trace'),)).source()
            summary = run(TreeArena(dist, MeasureKind.IGW), alpha, StopRule.time(horizon or 100.0),
                          source, record=True)
            write_trace(summary, config['trace'])

        result.passed = not wrong_sign
        result.summary = (f'velocity sign disagrees with α at {wrong_sign}' if wrong_sign
                          else f'{len(config["alphas"])} velocities estimated')
        return result
