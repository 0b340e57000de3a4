""" Custom exception classes.

Every error carries the process exit code the CLI maps it to:
2 usage/config/input, 3 IO, 4 numeric failure.
"""

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class AdvseqError(Exception):
    """ Base class for errors raised by advseq. """
    exit_code = EXIT_USAGE

    def __init__(self, msg, *args):
        super().__init__(msg, *args)
        self.msg = msg

    def __str__(self) -> str:
        return self.msg


class ShapeError(AdvseqError, ValueError):
    """ Operand shapes do not line up. """
    def __init__(self, operation: str, left_shape, right_shape):
        super().__init__(
            f"{operation}: incompatible shapes {tuple(left_shape)} and {tuple(right_shape)}"
        )
        self.left_shape = tuple(left_shape)
        self.right_shape = tuple(right_shape)
        self.operation = operation

    def __reduce__(self):
        return type(self), (self.operation, self.left_shape, self.right_shape)


class ParameterError(AdvseqError, ValueError):
    """ A numeric parameter is outside its domain. """


class InputError(AdvseqError, ValueError):
    """ An input sequence, token or text is invalid. """


class ConfigurationError(AdvseqError, ValueError):
    """ A configuration (file, options or objects) is invalid. """


class UnsupportedInputError(AdvseqError, TypeError):
    """ An operation was asked to work on an input domain it does not support. """


class ModelFormatError(AdvseqError):
    """ A serialized model could not be decoded. """


class DatasetIOError(AdvseqError, OSError):
    """ A dataset or report file could not be read or written. """
    exit_code = EXIT_IO


class TrainingDivergedError(AdvseqError, ArithmeticError):
    """ The training loss became non-finite. """
    exit_code = EXIT_NUMERIC

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss

    def __reduce__(self):
        return type(self), (self.epoch, self.loss)
