from experiments.base import LabCommand
from experiments.output import LabResult
from spine.zjbis import zjbis_trials

DEFAULT_TOL = 1e-10


class Command(LabCommand):
    help = (
        'Exact spine identity: backward recursion product against the absorbing-chain linear system on '
        'random instances. Columns: label,alpha,estimator,mean,stderr,n,target.'
    )
    required_fields = ()

    def add_lab_arguments(self, parser):
        parser.add_argument('--n', type=int, help='largest instance size (default 8)')
        parser.add_argument('--trials', type=int, help='random instances (default 100)')
        parser.add_argument('--tol', type=float, help='largest accepted |lhs - rhs| (default 1e-10)')

    def run_experiment(self, config):
        trials = config.get('trials', 100)
        worst = zjbis_trials(trials, max(config.get('n', 8), 2), config['seed'])
        tol = config.get('tol', DEFAULT_TOL)
        result = LabResult()
        result.add(f'trials={trials}', 'max_abs_gap', worst, target=0.0)
        result.passed = worst < tol
        result.summary = f'max |lhs - rhs| = {worst:.3e} over {trials} instances'
        return result
