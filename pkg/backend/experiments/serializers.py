from django.conf import settings
from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from offspring.distribution import OffspringDist, parse_offspring
from .models import EstimateRecord, ExperimentRun


class CommaListField(serializers.ListField):
    """Accepts a list or a comma separated string such as "-0.2,-0.1,0.1"."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item for item in data.replace(' ', '').split(',') if item]
        return super().to_internal_value(data)


class RunConfigSerializer(serializers.Serializer):
    """Validated run configuration; everything is checked before any work starts.

    The owning command passes ``required`` (field names it cannot run
    without) in the serializer context.
    """
    FORMAT_CHOICES = ['csv', 'json']

    dist = serializers.CharField(required=False)
    alphas = CommaListField(child=serializers.FloatField(), required=False, allow_empty=False)
    alpha = serializers.FloatField(required=False)
    replicas = serializers.IntegerField(required=False, min_value=2)
    horizon = serializers.FloatField(required=False, min_value=1.0)
    depth = serializers.IntegerField(required=False, min_value=1, max_value=64)
    samples = serializers.IntegerField(required=False, min_value=2)
    seed = serializers.IntegerField(required=False, min_value=0)
    parallelism = serializers.IntegerField(required=False, min_value=1)
    out = serializers.CharField(required=False)
    format = serializers.ChoiceField(choices=FORMAT_CHOICES, required=False)
    n = serializers.IntegerField(required=False, min_value=1)
    r = serializers.IntegerField(required=False, min_value=1)
    trials = serializers.IntegerField(required=False, min_value=1)
    tol = serializers.FloatField(required=False, min_value=0.0)
    tolerance = serializers.FloatField(required=False, min_value=0.0)
    check = serializers.CharField(required=False)
    levels = CommaListField(child=serializers.IntegerField(min_value=0), required=False, allow_empty=False)
    mode = serializers.ChoiceField(choices=['mean', 'exact', 'both'], required=False)
    one_sided = serializers.BooleanField(required=False)
    y_max = serializers.IntegerField(required=False, min_value=1)
    kappa = serializers.FloatField(required=False)
    path_length = serializers.IntegerField(required=False, min_value=10)
    pool_size = serializers.IntegerField(required=False, min_value=8)
    inner = serializers.IntegerField(required=False, min_value=0)
    trace = serializers.CharField(required=False)
    limit = serializers.IntegerField(required=False, min_value=1)
    run = serializers.IntegerField(required=False, min_value=1)

    def validate_dist(self, value):
        try:
            return parse_offspring(value)
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages, code=getattr(exc, 'code', 'invalid'))

    def validate_alphas(self, value):
        if any(abs(a) > 50 for a in value):
            raise serializers.ValidationError("Bias parameters must satisfy |α| ≤ 50.")
        return value

    def validate_check(self, value):
        choices = self.context.get('checks')
        if choices and value not in choices:
            raise serializers.ValidationError(f"Unknown check {value!r}; choose from {', '.join(choices)}.")
        return value

    def validate(self, attrs):
        missing = [name for name in self.context.get('required', ()) if name not in attrs]
        if missing:
            raise serializers.ValidationError({name: "This field is required." for name in missing})
        if attrs.get('r') is not None and attrs.get('n') is not None and attrs['r'] > attrs['n']:
            raise serializers.ValidationError("r must not exceed n.")
        attrs.setdefault('seed', settings.GWLAB['SEED'])
        attrs.setdefault('parallelism', settings.GWLAB['PARALLELISM'])
        attrs.setdefault('format', 'csv')
        return attrs

    @staticmethod
    def echo(config):
        """JSON-friendly copy of a validated config."""
        return {
            key: str(value) if isinstance(value, OffspringDist) else value
            for key, value in sorted(config.items())
        }


class EstimateSerializer(serializers.Serializer):
    label = serializers.CharField()
    alpha = serializers.FloatField(allow_null=True)
    estimator = serializers.CharField()
    mean = serializers.FloatField(allow_null=True)
    stderr = serializers.FloatField(allow_null=True)
    n = serializers.IntegerField(allow_null=True)
    target = serializers.FloatField(allow_null=True)


class RunSummarySerializer(serializers.Serializer):
    """JSON output of a lab command (see schemas/run_summary.schema.json)."""
    command = serializers.CharField()
    version = serializers.CharField()
    seed = serializers.IntegerField()
    config = serializers.DictField()
    passed = serializers.BooleanField()
    summary = serializers.CharField(allow_blank=True)
    estimates = EstimateSerializer(many=True)


class EstimateRecordSerializer(serializers.ModelSerializer):
    sigma_distance = serializers.SerializerMethodField()

    class Meta:
        model = EstimateRecord
        fields = ['id', 'label', 'alpha', 'estimator', 'mean', 'stderr', 'n', 'target', 'sigma_distance']

    def get_sigma_distance(self, obj):
        return obj.sigma_distance()


class ExperimentRunSerializer(serializers.ModelSerializer):
    status_display = serializers.CharField(source='get_status_display', read_only=True)
    estimates = EstimateRecordSerializer(many=True, read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'command', 'config', 'seed', 'version', 'status', 'status_display',
            'exit_code', 'wall_time', 'output_path', 'message', 'created_at', 'estimates',
        ]
        read_only_fields = fields
