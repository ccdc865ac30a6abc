"""Shared exception types for the pipeline."""


class PipelineError(Exception):
    """Base class for anything the CLI turns into a nonzero exit."""


class UsageError(PipelineError):
    """Bad arguments or unknown variants."""


class ContractViolation(PipelineError):
    """A file or record broke one of the documented interchange contracts."""
