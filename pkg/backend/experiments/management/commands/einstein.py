from django.core.management.base import CommandError

from environment.density import v_alpha_closed
from experiments.base import EXIT_USAGE, LabCommand
from experiments.output import LabResult
from walks.estimators import einstein_slope_fit, estimate_velocity

DEFAULT_TOLERANCE = 0.10


class Command(LabCommand):
    help = (
        'Einstein relation: simulated v_α on both sides of α = 0 and the least-squares slope '
        'through the origin against D0/2. Rows: v_sim (and v_closed for α < 0) per α, then the slope. '
        'Columns: label,alpha,estimator,mean,stderr,n,target.'
    )
    required_fields = ('dist', 'alphas')

    def add_lab_arguments(self, parser):
        parser.add_argument('--alphas', help='comma separated bias values')
        parser.add_argument('--replicas', type=int)
        parser.add_argument('--horizon', type=float)
        parser.add_argument('--tolerance', type=float, help='relative slope tolerance (default 0.10)')
        parser.add_argument('--one-sided', dest='one_sided', action='store_const', const=True,
                            help='allow alphas of a single sign')

    def validate_config(self, config):
        alphas = config['alphas']
        if 0.0 in alphas:
            raise CommandError('alphas must be non-zero.', returncode=EXIT_USAGE)
        if not config.get('one_sided') and not (min(alphas) < 0 < max(alphas)):
            raise CommandError('alphas must straddle 0 (or pass --one-sided).', returncode=EXIT_USAGE)

    def run_experiment(self, config):
        dist = config['dist']
        result = LabResult()
        fitted = []
        for alpha in config['alphas']:
            v = estimate_velocity(dist, alpha, config.get('horizon'), config.get('replicas'),
                                  config['seed'], config['parallelism'])
            fitted.append((alpha, v))
            if alpha < 0:
                closed = v_alpha_closed(dist, alpha)
                result.add(f'alpha={alpha!r}', 'v_sim', v, alpha, closed)
                result.add(f'alpha={alpha!r}', 'v_closed', closed, alpha)
            else:
                result.add(f'alpha={alpha!r}', 'v_sim', v, alpha)

        slope = einstein_slope_fit(fitted)
        target = dist.constants().einstein_slope
        result.add('slope', 'least_squares', slope, target=target)
        tolerance = config.get('tolerance', DEFAULT_TOLERANCE)
        result.passed = abs(slope.mean - target) <= tolerance * target
        result.summary = f'slope {slope.mean:.5f} +- {slope.stderr:.5f} against D0/2 = {target:.5f}'
        return result
