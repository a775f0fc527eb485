from django.core.exceptions import ValidationError


class OffspringError(ValidationError):
    """Invalid offspring law; ``code`` names the violated rule."""
    code = 'invalid_offspring'

    def __init__(self, message):
        super().__init__(message, code=self.code)


class ZeroOffspringMass(OffspringError):
    code = 'zero_offspring_mass'


class NotNormalized(OffspringError):
    code = 'not_normalized'


class SubcriticalMean(OffspringError):
    code = 'subcritical_mean'


class NegativeProbability(OffspringError):
    code = 'negative_probability'


class DuplicateOffspring(OffspringError):
    code = 'duplicate_offspring'
