from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32)),
                ('config', models.JSONField(default=dict)),
                ('seed', models.BigIntegerField(default=0)),
                ('version', models.CharField(max_length=32)),
                ('status', models.CharField(choices=[('RUNNING', 'Running'), ('PASSED', 'Passed'), ('CHECK_FAILED', 'Check failed'), ('ERROR', 'Error')], default='RUNNING', max_length=20)),
                ('exit_code', models.IntegerField(blank=True, null=True)),
                ('wall_time', models.FloatField(blank=True, help_text='Seconds', null=True)),
                ('output_path', models.CharField(blank=True, max_length=500)),
                ('message', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='EstimateRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(max_length=100)),
                ('alpha', models.FloatField(blank=True, null=True)),
                ('estimator', models.CharField(max_length=64)),
                ('mean', models.FloatField()),
                ('stderr', models.FloatField(blank=True, null=True)),
                ('n', models.IntegerField(blank=True, null=True)),
                ('target', models.FloatField(blank=True, null=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='estimates', to='experiments.experimentrun')),
            ],
            options={
                'ordering': ['run', 'id'],
            },
        ),
    ]
