from experiments.base import LabCommand
from experiments.output import LabResult
from walks.estimators import estimate_diffusivity, estimate_diffusivity_w, estimate_w_second_moment

SIGMAS = 3.0


class Command(LabCommand):
    help = (
        'Diffusivity of the unbiased walk two ways: ρ(X_t)²/t and the W-moment formula, both against D0, '
        'plus ⟨W_o²⟩ against b. Columns: label,alpha,estimator,mean,stderr,n,target.'
    )

    def add_lab_arguments(self, parser):
        parser.add_argument('--replicas', type=int)
        parser.add_argument('--horizon', type=float)
        parser.add_argument('--depth', type=int, help='martingale depth for W')

    def run_experiment(self, config):
        dist = config['dist']
        constants = dist.constants()
        seed = config['seed']
        replicas = config.get('replicas')
        direct = estimate_diffusivity(dist, config.get('horizon'), replicas, seed, config['parallelism'])
        moments = estimate_diffusivity_w(dist, config.get('depth'), replicas, seed)
        second = estimate_w_second_moment(dist, config.get('depth'), replicas, seed)

        result = LabResult()
        result.add('diffusivity', 'rho_squared_over_t', direct, 0.0, constants.d0)
        result.add('diffusivity', 'w_moments', moments, 0.0, constants.d0)
        result.add('w_root', 'second_moment', second, 0.0, constants.b)
        failed = [row.estimator for row in result.rows if not row.value.covers(row.target, SIGMAS)]
        result.passed = not failed
        result.summary = (f'outside {SIGMAS:g} sigma: {", ".join(failed)}' if failed
                          else f'D = {direct.mean:.4f} / {moments.mean:.4f} against D0 = {constants.d0:.4f}')
        return result
