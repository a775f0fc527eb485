from django.conf import settings
from django.core.management.base import CommandError

from environment.checks import (
    ancestor_moments, gw_singular_psi_check, mu_infinity_velocity, negative_sweep, psi_trend,
    stationarity_residual, z_alpha_mean,
)
from experiments.base import EXIT_USAGE, LabCommand
from experiments.output import LabResult

SIGMAS = 3.0


class Command(LabCommand):
    help = (
        'Environment seen from the walker for α < 0. Checks: sweep (C_α, closed-form and simulated v_α), '
        'z (⟨Z_α⟩ against C_α), ancestors (⟨W_-j⟩), stationarity (⟨ψ_α L_α f⟩), mu-infinity '
        '(velocity at large α against C and 1/C), singular (GW-singular ψ), psi-trend. '
        'Columns: label,alpha,estimator,mean,stderr,n,target.'
    )
    checks = ('sweep', 'z', 'ancestors', 'stationarity', 'mu-infinity', 'singular', 'psi-trend')

    def add_lab_arguments(self, parser):
        parser.add_argument('--alphas', help='comma separated negative bias values (use --alphas=-0.5,-0.1)')
        parser.add_argument('--alpha', type=float)
        parser.add_argument('--samples', type=int)
        parser.add_argument('--replicas', type=int)
        parser.add_argument('--horizon', type=float)
        parser.add_argument('--depth', type=int, help='martingale depth')
        parser.add_argument('--n', type=int, help='ray truncation j_max')
        parser.add_argument('--levels', help='ancestor indices j')

    def validate_config(self, config):
        check = config['check']
        if check in ('sweep', 'z', 'psi-trend') and 'alphas' not in config and 'alpha' not in config:
            raise CommandError(f'{check} needs --alphas.', returncode=EXIT_USAGE)
        if check in ('stationarity', 'singular') and 'alpha' not in config:
            raise CommandError(f'{check} needs --alpha.', returncode=EXIT_USAGE)

    def run_experiment(self, config):
        handler = getattr(self, '_' + config['check'].replace('-', '_'))
        return handler(config, config['dist'], config.get('samples', settings.GWLAB['SAMPLES']))

    @staticmethod
    def _alphas(config):
        return config.get('alphas') or [config['alpha']]

    @staticmethod
    def _finish(result, what):
        failed = [row.label for row in result.rows
                  if row.target is not None and row.stderr is not None and not row.value.covers(row.target, SIGMAS)]
        result.passed = not failed
        result.summary = f'{what}: outside {SIGMAS:g} sigma at {failed}' if failed else f'{what}: ok'
        return result

    def _sweep(self, config, dist, samples):
        result = LabResult()
        rows = negative_sweep(dist, self._alphas(config), config.get('horizon'), config.get('replicas'),
                              config['seed'], config['parallelism'])
        for row in rows:
            label = f'alpha={row.alpha!r}'
            result.add(label, 'c_alpha', row.c_alpha, row.alpha)
            result.add(label, 'v_closed', row.v_closed, row.alpha)
            result.add(label, 'v_sim', row.v_simulated, row.alpha, row.v_closed)
        return self._finish(result, 'closed-form velocity')

    def _z(self, config, dist, samples):
        result = LabResult()
        failed = []
        for alpha in self._alphas(config):
            report = z_alpha_mean(dist, alpha, samples, config['seed'], config['parallelism'],
                                  config.get('n'), config.get('depth'))
            result.add(f'alpha={alpha!r}', 'z_alpha', report.z, alpha, report.c_alpha)
            result.add(f'alpha={alpha!r}', 'truncation_error', report.truncation_error, alpha)
            result.add(f'alpha={alpha!r}', 'median_abs_alpha_z', report.scaled_median, alpha)
            if not report.agrees:
                failed.append(alpha)
        result.passed = not failed
        result.summary = f'<Z_alpha> off C_alpha at {failed}' if failed else '<Z_alpha> matches C_alpha'
        return result

    def _ancestors(self, config, dist, samples):
        result = LabResult()
        js = tuple(config.get('levels') or (0, 1, 2, 5))
        for j, (value, target) in ancestor_moments(dist, js, samples, config['seed'], config['parallelism'],
                                                   config.get('depth')).items():
            result.add(f'j={j}', 'w_ancestor', value, target=target)
        return self._finish(result, 'ancestor moments')

    def _stationarity(self, config, dist, samples):
        alpha = config['alpha']
        result = LabResult()
        residuals = stationarity_residual(dist, alpha, samples=samples, seed=config['seed'],
                                          parallelism=config['parallelism'], j_max=config.get('n'),
                                          depth=config.get('depth'))
        for name, value in residuals.items():
            result.add(f'f={name}', 'residual', value, alpha, 0.0)
        return self._finish(result, 'stationarity')

    def _mu_infinity(self, config, dist, samples):
        alpha = config.get('alpha', 8.0)
        report = mu_infinity_velocity(dist, samples, config['seed'], alpha, config.get('horizon'),
                                      config.get('replicas'), config['parallelism'])
        result = LabResult()
        result.add('velocity', 'v_sim', report.velocity, alpha)
        result.add('C', 'harmonic_mean', report.c_harmonic, alpha)
        result.add('1/C', 'inverse', report.inverse, alpha)
        result.add('normalization', '1/(C d_o)', report.normalization, alpha, 1.0)
        self._finish(result, 'normalization')
        result.summary = f'{result.summary}; velocity matches {report.match}'
        return result

    def _singular(self, config, dist, samples):
        alpha = config['alpha']
        value, tail = gw_singular_psi_check(dist, alpha, config.get('n', 80), samples, config['seed'],
                                            config['parallelism'])
        result = LabResult()
        result.add('psi_singular', 'mean', value, alpha, 1.0)
        result.add('psi_singular', 'truncation', tail, alpha)
        result.passed = value.covers(1.0, SIGMAS, slack=tail)
        result.summary = f'GW-singular psi mean {value.mean:.5f} +- {value.stderr:.5f}'
        return result

    def _psi_trend(self, config, dist, samples):
        trend = psi_trend(dist, self._alphas(config), min(samples, 2000), config['seed'],
                          config['parallelism'], config.get('depth'))
        result = LabResult()
        for alpha, value in trend.items():
            result.add(f'alpha={alpha!r}', 'mean_abs_psi_minus_1', value, alpha)
        means = [value.mean for value in trend.values()]
        result.passed = all(a >= b for a, b in zip(means, means[1:]))
        result.summary = f'|psi - 1| shrinking towards 0: {result.passed}'
        return result
