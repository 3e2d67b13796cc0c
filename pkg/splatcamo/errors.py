# -*- coding: utf-8 -*-
__copyright__ = "Copyright (c) 2026 splat-camo contributors"


class SplatError(Exception):
    """
    Base error. Carries a machine-readable code, a human detail message and
    optional context (index, iteration, view, path, ...) that the CLI turns
    into its JSON error document.
    """
    code = "splat_error"

    def __init__(self, detail, **context):
        super(SplatError, self).__init__(detail)
        self.detail = detail
        self.context = context

    def to_document(self):
        document = {"error": self.code, "detail": self.detail}
        document.update({k: v for k, v in self.context.items() if v is not None})
        return document


class PreconditionError(SplatError, ValueError):
    code = "precondition"


class StructureError(SplatError):
    code = "structure"


class FitError(SplatError):
    code = "fit"


class CloudParseError(SplatError):
    code = "parse"


class ProjectionError(SplatError):
    code = "projection"


class TrainingError(SplatError):
    code = "training"


class MetricError(SplatError):
    code = "metric"


class TextureError(SplatError):
    code = "texture"


class ConfigError(SplatError):
    code = "config"


class DetectorError(SplatError):
    code = "detector"
