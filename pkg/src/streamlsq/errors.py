"""Exception types raised across the package."""


class StreamlsqError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefinite(StreamlsqError):
    """A Cholesky pivot fell below the positive-definiteness threshold.

    Usually a sign that a block is missing regularization.
    """


class NoConvergence(StreamlsqError):
    """The eigensolver exhausted its sweep budget without converging."""


class GridTooCoarse(StreamlsqError):
    """A constructed basis failed its orthonormality self-check."""


class UnsortedStream(StreamlsqError):
    """Sample times were not non-decreasing."""


class KernelTooLong(StreamlsqError):
    """A measurement kernel support exceeds what two adjacent packets span."""


class SingularTail(StreamlsqError):
    """The initial tail block is not positive definite (lambda too small)."""


class SingularBlock(StreamlsqError):
    """A factorization block lost positive definiteness mid-stream."""


class NonContiguousBatch(StreamlsqError):
    """Batches must arrive with consecutive indices."""


class HistoryTruncated(StreamlsqError):
    """A full backward sweep was requested after history was released."""


class OutOfRegime(StreamlsqError):
    """Conditioning parameters violate the contraction hypothesis."""


class SingularSystem(StreamlsqError):
    """The dense normal equations are singular or numerically unsolvable."""
