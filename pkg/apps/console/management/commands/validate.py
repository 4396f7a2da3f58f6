from django.core.management.base import CommandError

from apps.console.base import EXIT_VALIDATION, ModelCommand
from apps.console.validation import ValidationService


class Command(ModelCommand):
    help = 'Run every analytic-vs-numeric cross-check on the configured model and print a pass/fail table.'

    def run(self, **options):
        reference = self.config.initial.state if self.config.initial is not None else None
        report = ValidationService(self.config.params, reference).run()
        with self.output(options) as stream:
            stream.write(report.as_table() + '\n')
        worst = report.worst_offender()
        if worst is not None:
            raise CommandError(
                f'{worst.name}: deviation {worst.worst.deviation:.3e} exceeds {worst.worst.tolerance:.3e}',
                returncode=EXIT_VALIDATION,
            )
