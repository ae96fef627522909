"""Exception types shared across reflectlab.

Every error carries a short machine-readable ``code`` so the CLI can turn it
into an error document without string matching.
"""


class ReflectLabError(Exception):
    code = "reflectlab-error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ModelError(ReflectLabError):
    code = "invalid-model"


class PoleError(ReflectLabError):
    code = "pole"


class NoCramerRootError(ReflectLabError):
    code = "no-cramer-root"


class FactorizationError(ReflectLabError):
    code = "factorization-failure"


class DivergentTailError(ReflectLabError):
    code = "divergent-tail"


class OscillationError(ReflectLabError):
    code = "oscillation-detected"


class UnsupportedModelError(ReflectLabError):
    code = "unsupported-model"


class ConfigError(ReflectLabError):
    code = "config-error"
