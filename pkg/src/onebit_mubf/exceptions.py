"""Exception types raised across the library.

Every failure mode the library reports deliberately gets its own class so
callers (and the CLI exit-code mapping) can discriminate without string
matching.
"""


class OneBitError(Exception):
    """Base class for all library-specific failures."""


class BadDims(OneBitError):
    """Inconsistent or unsupported matrix/vector dimensions."""


class NonHermitian(OneBitError):
    """Matrix failed the Hermitian symmetry check."""


class NoConvergence(OneBitError):
    """Iterative eigensolver did not reach the requested tolerance."""


class NotPositiveDefinite(OneBitError):
    """Cholesky factorization failed; metric matrix is not positive definite."""


class RankDeficient(OneBitError):
    """Fewer null directions than expected; channel matrix is rank deficient."""


class BadScenario(OneBitError):
    """Geometric placement parameters are out of range."""


class ParseError(OneBitError):
    """Channel file could not be parsed; message names the offending token."""


class DimMismatch(OneBitError):
    """Channel file header disagrees with the actual payload shape."""


class BadAlpha(OneBitError):
    """Channel-estimation-error mixing coefficient outside [0, 1]."""


class ZeroDiagonal(OneBitError):
    """Covariance has a zero diagonal entry; Bussgang gain undefined."""


class CorrelationOutOfRange(OneBitError):
    """Normalized correlation magnitude exceeds 1 beyond tolerance (non-PSD input)."""


class ZeroMatrix(OneBitError):
    """All-zero matrix where a nonzero one is required."""


class NegativePower(OneBitError):
    """Power vector contains negative entries."""


class ZeroGain(OneBitError):
    """Beamformer is orthogonal to its own user channel."""


class NonPositiveEigenvector(OneBitError):
    """Dominant eigenvector of a coupling system is not strictly positive."""


class DualityViolation(OneBitError):
    """Uplink/downlink balance results disagree beyond tolerance."""


class MaxIters(OneBitError):
    """Alternating optimization exhausted its iteration budget."""


class SingularGram(OneBitError):
    """Channel Gram matrix is too ill-conditioned for zero forcing."""


class EmptyBlock(OneBitError):
    """Blind gain estimation called on an empty symbol block."""


class ConfigError(OneBitError):
    """Experiment configuration file is missing, malformed, or inconsistent."""
