"""Runtime failures raised while an experiment is running.

Input problems (bad offspring laws, bad run configs) are validation errors and
live next to the code that validates them. Everything here carries the exit
code the experiment runner reports for it.
"""


class LabError(Exception):
    exit_code = 2
    default_message = 'Experiment failed.'

    def __init__(self, message=None):
        super().__init__(message or self.default_message)


class ArenaOverflow(LabError):
    exit_code = 3
    default_message = 'Tree arena exceeded its node cap.'


class NotFrontier(LabError):
    default_message = 'Node is already expanded.'


class InsufficientDepth(LabError):
    default_message = 'Tree is not expanded deep enough.'


class BufferTooSmall(LabError):
    default_message = 'Regeneration buffer must be at least 1.'


class NoConvergence(LabError):
    default_message = 'Recursion did not converge before the depth cap.'


class DomainError(LabError):
    default_message = 'Parameter outside the domain of this quantity.'


class NotAdjacent(LabError):
    default_message = 'Target vertex is not adjacent to the current root.'


class SingularSystem(LabError):
    default_message = 'Absorbing chain system is singular.'


class PathTooShort(LabError):
    default_message = 'Path has no confirmed regeneration block.'


class TooFewSamples(LabError):
    default_message = 'At least two samples are needed for an interval.'


class ReplicaFailed(LabError):
    """One or more replicas raised; ``failures`` holds (replica_id, error) pairs."""

    def __init__(self, failures):
        self.failures = list(failures)
        first_id, first_error = self.failures[0]
        self.exit_code = getattr(first_error, 'exit_code', 2)
        ids = ', '.join(str(replica_id) for replica_id, _ in self.failures[:10])
        super().__init__(f'{len(self.failures)} replica(s) failed (ids {ids}): {first_error}')
