"""
Error types for the hashed-target NDP lab
Every failure raised by the library derives from NdpLabError so the CLI can report it in one place
"""


class NdpLabError(Exception):
    """Base class for all lab errors"""


# Key agreement

class DhParameterError(NdpLabError):
    """Invalid group parameters, seed or private exponent"""


class SmallSubgroupError(NdpLabError):
    """Peer public value is degenerate (0, 1 or p-1)"""


class HashKeyError(NdpLabError):
    """HMAC key is not exactly 32 bytes"""


class HashedTargetError(NdpLabError, ValueError):
    """Hashed Target field is not exactly 16 bytes"""


class AddressError(NdpLabError, ValueError):
    """Unparseable MAC address"""


# Wire codec

class NdpEncodeError(NdpLabError):
    """Message cannot be represented on the wire"""


class NdpDecodeError(NdpLabError):
    """Base class for every classified decode failure"""


class ChecksumError(NdpDecodeError):
    """ICMPv6 checksum does not verify"""


class UnsupportedMessageError(NdpDecodeError):
    """Unknown ICMPv6 type or code"""


class MalformedMessageError(NdpDecodeError):
    """Truncated or structurally invalid message body"""


# Node protocol

class ModeError(NdpLabError):
    """Operation not available in the node's mode"""


class MissingKeyError(NdpLabError):
    """Hashed-mode resolution attempted before key exchange"""


class ProtocolOrderError(NdpLabError):
    """Message arrived out of protocol order (e.g. KexResp without KexInit)"""


class ResolutionPendingError(NdpLabError):
    """A resolution for this target is already in flight"""


# Harness

class ConfigurationError(NdpLabError):
    """Invalid simulator topology or scenario configuration"""

    def __init__(self, message: str, diagnostics: list = None):
        self.diagnostics = diagnostics or []
        if self.diagnostics:
            message = message + "\n" + "\n".join(f"  - {line}" for line in self.diagnostics)
        super().__init__(message)


class ReportWriteError(NdpLabError):
    """Report or trace file could not be written"""
