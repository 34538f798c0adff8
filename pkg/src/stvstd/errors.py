class StvstdError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(StvstdError, ValueError):
    pass


class InputError(StvstdError, ValueError):
    """Input data violates an ordering or structural requirement."""


class ParseError(InputError):
    """Malformed JSON."""


class SchemaError(InputError):
    """Well-formed JSON that violates the file schema."""


class PairingError(InputError):
    """Ground-truth and prediction video sets do not line up."""


class GenerationError(StvstdError):
    pass
