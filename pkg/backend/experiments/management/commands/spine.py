import math

from django.conf import settings
from django.core.management.base import CommandError

from experiments.base import EXIT_USAGE, LabCommand
from experiments.output import LabResult
from montecarlo.accumulators import combined_sigma
from recursion.experiments import expected_phi
from spine.renewal import (
    block_lag_correlation, cut_comparison, h_estimate, phi_spine_estimate, r1_exponential_moment,
    regeneration_blocks, escape_sandwich, renewal_summary, renewal_closure, sample_r1,
)
from walks.estimators import estimate_velocity

SIGMAS = 3.0


class Command(LabCommand):
    help = (
        'Spine random walk with random potential. Checks: zeta2 (E[ζ_2] = 1), velocity (renewal '
        'representation against simulation), phi (spine estimate of E[Φ_n(r)] against the recursion), '
        'h (h(y) and Σh), closure (renewal closure of m E[β]/v_α), sandwich (bounds on E[B_n(o)]), '
        'blocks (lag-1 correlation of ζ), r1 (running means of e^(κ R_1)), cut (f_(n-r) against f_∞). '
        'Columns: label,alpha,estimator,mean,stderr,n,target.'
    )
    checks = ('zeta2', 'velocity', 'phi', 'h', 'closure', 'sandwich', 'blocks', 'r1', 'cut')

    def add_lab_arguments(self, parser):
        parser.add_argument('--alphas', help='comma separated bias values (zeta2)')
        parser.add_argument('--alpha', type=float)
        parser.add_argument('--samples', type=int, help='spine environments per estimate')
        parser.add_argument('--n', type=int)
        parser.add_argument('--r', type=int)
        parser.add_argument('--y-max', dest='y_max', type=int)
        parser.add_argument('--kappa', type=float)
        parser.add_argument('--path-length', dest='path_length', type=int)
        parser.add_argument('--pool-size', dest='pool_size', type=int)
        parser.add_argument('--inner', type=int, help='inner walks per environment (0: exact solve)')
        parser.add_argument('--replicas', type=int, help='walk replicas for simulated velocities')
        parser.add_argument('--horizon', type=float)

    def validate_config(self, config):
        check = config['check']
        if 'alpha' not in config and not (check == 'zeta2' and 'alphas' in config):
            raise CommandError(f'{check} needs --alpha.', returncode=EXIT_USAGE)
        if check != 'h' and config.get('alpha', 1.0) <= 0:
            raise CommandError('spine checks need α > 0.', returncode=EXIT_USAGE)
        if check in ('phi', 'cut', 'sandwich'):
            config.setdefault('n', 20)
            config.setdefault('r', 10)
            if check == 'sandwich' and not 2 <= config['r'] <= config['n'] - 1:
                raise CommandError('sandwich needs 2 <= r <= n - 1.', returncode=EXIT_USAGE)

    def run_experiment(self, config):
        handler = getattr(self, '_' + config['check'])
        return handler(config, config['dist'], config.get('samples', settings.GWLAB['SAMPLES']))

    def _common(self, config):
        return {'seed': config['seed'], 'parallelism': config['parallelism'], 'pool_size': config.get('pool_size')}

    def _zeta2(self, config, dist, samples):
        result = LabResult()
        failed = []
        for alpha in config.get('alphas') or [config['alpha']]:
            summary = renewal_summary(dist, alpha, samples, **self._common(config))
            result.add(f'alpha={alpha!r}', 'E_zeta2', summary.zeta2, alpha, 1.0)
            if not summary.zeta2.covers(1.0, SIGMAS):
                failed.append(alpha)
        result.passed = not failed
        result.summary = f'E[zeta2] off 1 at {failed}' if failed else 'E[zeta2] = 1 within 3 sigma'
        return result

    def _velocity(self, config, dist, samples):
        alpha = config['alpha']
        summary = renewal_summary(dist, alpha, samples, **self._common(config))
        v_rep = summary.velocity.as_estimate()
        v_sim = estimate_velocity(dist, alpha, config.get('horizon'), config.get('replicas'),
                                  config['seed'], config['parallelism'])
        result = LabResult()
        closed = dist.mean * (1.0 - math.exp(-alpha)) if dist.is_point_mass else None
        result.add(f'alpha={alpha!r}', 'v_rep', v_rep, alpha, closed)
        result.add(f'alpha={alpha!r}', 'v_rep_naive', summary.velocity.naive, alpha)
        result.add(f'alpha={alpha!r}', 'v_sim', v_sim, alpha, closed)
        result.add(f'alpha={alpha!r}', 'numerator', summary.numerator, alpha)
        result.add(f'alpha={alpha!r}', 'denominator', summary.leading, alpha)
        sigma = combined_sigma(v_rep, v_sim)
        result.passed = sigma <= SIGMAS
        result.summary = f'v_rep {v_rep.mean:.5f} against v_sim {v_sim.mean:.5f}: {sigma:.2f} sigma'
        return result

    def _phi(self, config, dist, samples):
        alpha, n, r = config['alpha'], config['n'], config['r']
        spine = phi_spine_estimate(dist, alpha, n, r, samples, config['seed'], config['parallelism'],
                                   config.get('inner', 0), config.get('pool_size'))
        result = LabResult()
        bound = math.exp(alpha * r)
        result.add(f'n={n},r={r}', 'phi_spine', spine, alpha, bound)
        if r < n:
            tree = expected_phi(dist, alpha, n, samples, config['seed'], config['parallelism'],
                                config.get('pool_size')).phi[r]
            result.add(f'n={n},r={r}', 'phi_recursion', tree, alpha, bound)
            sigma = combined_sigma(spine, tree)
            result.passed = sigma <= SIGMAS and spine.mean <= bound + SIGMAS * spine.stderr
            result.summary = f'spine against recursion: {sigma:.2f} sigma'
        else:
            result.passed = spine.mean == 0.0
            result.summary = 'Phi_n(n) vanishes'
        return result

    def _h(self, config, dist, samples):
        alpha = config['alpha']
        profile = h_estimate(dist, alpha, config.get('y_max', 40), samples, **self._common(config))
        result = LabResult()
        for y, value in enumerate(profile.h, start=1):
            result.add(f'y={y}', 'h', value, alpha)
        result.add('sum_h', 'total', profile.total, alpha, dist.mean / (dist.mean - 1.0))
        result.add('acceptance', 'fraction', profile.acceptance, alpha)
        result.summary = f'sum h = {profile.total.mean:.5f}, acceptance {profile.acceptance:.4f}'
        return result

    def _closure(self, config, dist, samples):
        alpha = config['alpha']
        closure = renewal_closure(dist, alpha, samples, config['seed'], config['parallelism'], config.get('horizon'),
                               config.get('replicas'), config.get('y_max', 40), config.get('pool_size'))
        limit = dist.mean / (dist.mean - 1.0)
        result = LabResult()
        result.add(f'alpha={alpha!r}', 'm_beta_over_v', closure.lhs, alpha)
        result.add(f'alpha={alpha!r}', 'renewal_side', closure.rhs, alpha, closure.lhs.mean)
        result.add(f'alpha={alpha!r}', 'leading_zeta_over_m', closure.leading, alpha, 1.0)
        result.add(f'alpha={alpha!r}', 'block_displacement', closure.denominator, alpha, limit)
        result.add(f'alpha={alpha!r}', 'sum_h', closure.h_total, alpha, limit)
        result.passed = closure.sigma <= SIGMAS
        result.summary = f'renewal closure: {closure.sigma:.2f} sigma'
        return result

    def _sandwich(self, config, dist, samples):
        alpha, n, r = config['alpha'], config['n'], config['r']
        report = escape_sandwich(dist, alpha, n, r, samples, **self._common(config))
        result = LabResult()
        result.add(f'n={n},r={r}', 'lower', report.lower, alpha)
        result.add(f'n={n},r={r}', 'E_B', report.e_b, alpha)
        result.add(f'n={n},r={r}', 'upper', report.upper, alpha)
        result.passed = report.holds
        result.summary = f'{report.lower.mean:.5f} <= E[B_n] = {report.e_b.mean:.5f} <= {report.upper.mean:.5f}'
        return result

    def _blocks(self, config, dist, samples):
        alpha = config['alpha']
        decomposition = regeneration_blocks(dist, alpha, config.get('path_length', 200000), seed=config['seed'],
                                            pool_size=config.get('pool_size'))
        corr, stderr = block_lag_correlation(decomposition.blocks)
        result = LabResult()
        result.add('blocks', 'count', len(decomposition.blocks), alpha)
        result.add('blocks', 'mean_zeta', float(decomposition.zetas.mean()), alpha, 1.0)
        result.add('blocks', 'lag1_correlation', corr, alpha, 0.0)
        result.add('leading', 'zeta1', decomposition.leading.zeta, alpha)
        descending = all(block.displacement <= -1 for block in decomposition.blocks)
        result.passed = abs(corr) <= SIGMAS * stderr and descending
        result.summary = f'lag-1 correlation {corr:.4f} (null stderr {stderr:.4f})'
        return result

    def _r1(self, config, dist, samples):
        alpha = config['alpha']
        kappa = config.get('kappa', 0.1)
        r1 = sample_r1(dist, alpha, samples, config['seed'])
        result = LabResult()
        for count, mean in r1_exponential_moment(r1, kappa):
            result.add(f'samples={count}', 'mean_exp_kappa_r1', mean, alpha)
        result.summary = f'E[exp({kappa:g} R1)] running means reported'
        return result

    def _cut(self, config, dist, samples):
        alpha, n, r = config['alpha'], config['n'], config['r']
        comparison = cut_comparison(dist, alpha, n, r, min(samples, 4096), config['seed'], config['parallelism'],
                                    config.get('pool_size'))
        result = LabResult()
        result.add(f'n={n},r={r}', 'finite_cut', comparison.finite, alpha)
        result.add(f'n={n},r={r}', 'infinite_cut', comparison.infinite, alpha)
        result.summary = f'f_inf minus f_(n-r): {comparison.gap:.6f}'
        return result
