import math

from django.db import models


class ExperimentRun(models.Model):
    """One invocation of a lab command, with its full configuration echo."""

    class Status(models.TextChoices):
        RUNNING = 'RUNNING', 'Running'
        PASSED = 'PASSED', 'Passed'
        CHECK_FAILED = 'CHECK_FAILED', 'Check failed'
        ERROR = 'ERROR', 'Error'

    command = models.CharField(max_length=32)
    config = models.JSONField(default=dict)
    seed = models.BigIntegerField(default=0)
    version = models.CharField(max_length=32)
    status = models.CharField(max_length=20, choices=Status.choices, default=Status.RUNNING)
    exit_code = models.IntegerField(null=True, blank=True)
    wall_time = models.FloatField(null=True, blank=True, help_text="Seconds")
    output_path = models.CharField(max_length=500, blank=True)
    message = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"{self.command} #{self.pk} ({self.get_status_display()})"

    @property
    def is_finished(self):
        return self.status != self.Status.RUNNING

    def finish(self, exit_code, wall_time, message=''):
        if exit_code == 0:
            self.status = self.Status.PASSED
        elif exit_code == 2:
            self.status = self.Status.CHECK_FAILED
        else:
            self.status = self.Status.ERROR
        self.exit_code = exit_code
        self.wall_time = wall_time
        self.message = message
        self.save()


class EstimateRecord(models.Model):
    """A single estimate produced by a run, optionally with its target value."""
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='estimates')
    label = models.CharField(max_length=100)
    alpha = models.FloatField(null=True, blank=True)
    estimator = models.CharField(max_length=64)
    mean = models.FloatField()
    stderr = models.FloatField(null=True, blank=True)
    n = models.IntegerField(null=True, blank=True)
    target = models.FloatField(null=True, blank=True)

    class Meta:
        ordering = ['run', 'id']

    def __str__(self):
        return f"{self.label} {self.estimator} = {self.mean:g}"

    def sigma_distance(self):
        """|mean - target| / stderr, or None when there is nothing to compare."""
        if self.target is None or not self.stderr:
            return None
        return abs(self.mean - self.target) / self.stderr if self.stderr > 0 else math.inf
