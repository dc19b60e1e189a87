from . import errors, log, types
