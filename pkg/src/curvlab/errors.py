"""Exception hierarchy shared by every curvlab module."""


class CurvlabError(Exception):
    """Base class for all curvlab errors."""


class ValidationError(CurvlabError, ValueError):
    """Input violates a structural invariant (asymmetric form, bad curvature tensor, ...)."""


class DegenerateForm(CurvlabError, ValueError):
    pass


class InvalidSplit(CurvlabError, ValueError):
    pass


class SingularMap(CurvlabError, ValueError):
    pass


class NotAMember(CurvlabError):
    pass


class InconsistentPermutation(CurvlabError):
    pass


class ModelMismatch(CurvlabError, ValueError):
    pass


class IncompatibleBlocks(CurvlabError, ValueError):
    pass


class NotBalanced(CurvlabError, ValueError):
    pass


class DegeneratePlane(CurvlabError, ValueError):
    pass


class DegenerateHessian(CurvlabError, ValueError):
    pass


class NotSkewTsankov(CurvlabError):
    pass


class DegenerateSpectrum(CurvlabError):
    pass
