import logging

from django.db.models.signals import post_save
from django.dispatch import receiver

from .models import ExperimentRun

logger = logging.getLogger(__name__)


@receiver(post_save, sender=ExperimentRun)
def log_run_progress(sender, instance, created, **kwargs):
    """Log run start and completion; the command itself only talks to stdout."""
    if created:
        logger.info('run %s started: %s seed=%d', instance.pk, instance.command, instance.seed)
        return
    if not instance.is_finished:
        return
    wall = f'{instance.wall_time:.2f}s' if instance.wall_time is not None else 'n/a'
    if instance.status == ExperimentRun.Status.PASSED:
        logger.info('run %s %s finished in %s', instance.pk, instance.command, wall)
    else:
        logger.warning('run %s %s ended %s (exit %s): %s', instance.pk, instance.command,
                       instance.status, instance.exit_code, instance.message)
