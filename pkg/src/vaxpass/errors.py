"""Exception hierarchy shared by all modules.

Contract operations raise exactly one of Unauthorized / GuardFailed /
WindowExpired for caller, state-guard and deadline violations respectively,
so tests and scenario scripts can assert on the failure class.
"""


class VaxpassError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(VaxpassError):
    """A caller-supplied value is malformed or out of range."""


class InsufficientFunds(VaxpassError):
    """A party's balance cannot cover the requested lock or transfer."""


class EscrowNotFound(VaxpassError):
    """Unknown or already-released escrow id."""


class Unauthorized(VaxpassError):
    """The caller does not match the operation's required party."""


class GuardFailed(VaxpassError):
    """A state-machine precondition does not hold."""


class WindowExpired(VaxpassError):
    """The operation arrived after its step deadline."""


class NotFound(VaxpassError):
    """Lookup of a stored object failed."""


class DuplicateLeaf(VaxpassError):
    """A leaf value occurs more than once in a tree input."""


class NotALeaf(VaxpassError):
    """Membership proof requested for a value that is not in the tree."""


class DecodeError(VaxpassError):
    """Malformed key, signature or ciphertext encoding."""


class DecryptFailure(VaxpassError):
    """Decryption with the supplied key does not yield a valid plaintext."""


class SingleHopViolation(VaxpassError):
    """Attempt to re-encrypt a ciphertext that was already re-encrypted."""


class ScenarioError(VaxpassError):
    """A scenario file cannot be parsed or fails validation."""
