"""Simulated SCMI mailbox transport.

Each channel is a byte-exact 40 B record: channel status (4 B), flags (4 B),
length (4 B), message header (4 B: protocol_id, message_id, token), an 8 B
implementation-defined payload, and 16 B reserved of which the first 4 carry
the agent identifier. All fields are little-endian. A region holds 64 channels
plus per-channel doorbells; one writer (governor side) and one drainer
(platform side) synchronize through the per-channel busy flags, guarded here by
a region lock.
"""

from __future__ import annotations

import logging
import struct
import threading
from dataclasses import dataclass

from .errors import ChannelBusy, MalformedMessage

log = logging.getLogger(__name__)

CHANNEL_SIZE = 40
CHANNEL_COUNT = 64

_RECORD = struct.Struct("<IIIBBH8sI12s")
assert _RECORD.size == CHANNEL_SIZE

STATUS_FREE = 0
STATUS_BUSY = 1

PROTOCOL_BASE = 0x10
PROTOCOL_POWER = 0x12
PROTOCOL_PERF = 0x13
MSG_BASE_VERSION = 0x00
MSG_POWER_CAP_SET = 0x05
MSG_PERF_LEVEL_SET = 0x07

SCMI_SUCCESS = 0
IMPLEMENTATION_VERSION = 0x0001_0000  # v1.0 reported by BaseVersion

FLAG_RESPONSE = 0x1


@dataclass(frozen=True)
class BaseVersion:
    agent_id: int = 0


@dataclass(frozen=True)
class PerfLevelSet:
    core: int
    freq_hz: float  # whole hertz on the wire
    agent_id: int = 0


@dataclass(frozen=True)
class PowerCapSet:
    budget_w: float  # milliwatt resolution on the wire
    agent_id: int = 0


ScmiCommand = BaseVersion | PerfLevelSet | PowerCapSet


def _encode_payload(cmd: ScmiCommand) -> tuple[int, int, bytes]:
    if isinstance(cmd, BaseVersion):
        return PROTOCOL_BASE, MSG_BASE_VERSION, b""
    if isinstance(cmd, PerfLevelSet):
        return PROTOCOL_PERF, MSG_PERF_LEVEL_SET, struct.pack(
            "<II", cmd.core, int(round(cmd.freq_hz))
        )
    if isinstance(cmd, PowerCapSet):
        return PROTOCOL_POWER, MSG_POWER_CAP_SET, struct.pack(
            "<II", int(round(cmd.budget_w * 1000.0)), 0
        )
    raise TypeError(f"not an SCMI command: {cmd!r}")


def _decode_payload(protocol_id: int, message_id: int, payload: bytes, agent_id: int) -> ScmiCommand:
    if protocol_id == PROTOCOL_BASE and message_id == MSG_BASE_VERSION:
        return BaseVersion(agent_id=agent_id)
    if protocol_id == PROTOCOL_PERF and message_id == MSG_PERF_LEVEL_SET:
        core, freq = struct.unpack("<II", payload)
        return PerfLevelSet(core=core, freq_hz=float(freq), agent_id=agent_id)
    if protocol_id == PROTOCOL_POWER and message_id == MSG_POWER_CAP_SET:
        mw, _ = struct.unpack("<II", payload)
        return PowerCapSet(budget_w=mw / 1000.0, agent_id=agent_id)
    raise MalformedMessage(f"unknown message protocol=0x{protocol_id:02x} id=0x{message_id:02x}")


class MailboxRegion:
    """64-channel shared memory region with doorbell notification."""

    def __init__(self, channel_count: int = CHANNEL_COUNT):
        self.channel_count = channel_count
        self._mem = bytearray(channel_count * CHANNEL_SIZE)
        self.doorbell = [False] * channel_count
        self._lock = threading.Lock()
        self._token = 0

    def channel_bytes(self, channel: int) -> bytes:
        off = channel * CHANNEL_SIZE
        return bytes(self._mem[off : off + CHANNEL_SIZE])

    def _write_record(self, channel: int, record: bytes):
        off = channel * CHANNEL_SIZE
        self._mem[off : off + CHANNEL_SIZE] = record

    def is_busy(self, channel: int) -> bool:
        return self.channel_bytes(channel)[0:4] != STATUS_FREE.to_bytes(4, "little")

    def encode(self, cmd: ScmiCommand, channel: int) -> bytes:
        """Lay the command out on a free channel and ring its doorbell."""
        with self._lock:
            if self.is_busy(channel) or self.doorbell[channel]:
                raise ChannelBusy(f"channel {channel} holds an unconsumed message")
            protocol_id, message_id, payload = _encode_payload(cmd)
            token = self._token & 0xFFFF
            self._token += 1
            record = _RECORD.pack(
                STATUS_BUSY,
                0,
                4 + len(payload),
                protocol_id,
                message_id,
                token,
                payload.ljust(8, b"\x00"),
                cmd.agent_id,
                b"\x00" * 12,
            )
            self._write_record(channel, record)
            self.doorbell[channel] = True
            return record

    def send(self, cmd: ScmiCommand) -> int | None:
        """Encode on the lowest-index free channel; None when all are busy."""
        for ch in range(self.channel_count):
            if not self.is_busy(ch) and not self.doorbell[ch]:
                self.encode(cmd, ch)
                return ch
        return None

    def read_response(self, channel: int) -> tuple[int, bytes]:
        """Agent-side view of a completed channel: (status word, 8 B payload)."""
        rec = _RECORD.unpack(self.channel_bytes(channel))
        payload = rec[6]
        (status,) = struct.unpack("<i", payload[0:4])
        return status, payload

    def pending_channels(self) -> list[int]:
        return [ch for ch in range(self.channel_count) if self.doorbell[ch]]


def platform_drain(region: MailboxRegion) -> list[ScmiCommand]:
    """Consume every pending doorbell in channel order, answer each message in
    place, free the channels, and hand the decoded commands to the caller.

    A malformed record clears its channel with a diagnostic and does not
    disturb the others; draining happens at task boundaries, not instantaneously.
    """
    commands: list[ScmiCommand] = []
    with region._lock:
        for ch in range(region.channel_count):
            if not region.doorbell[ch]:
                continue
            raw = region.channel_bytes(ch)
            region.doorbell[ch] = False
            try:
                status, flags, length, protocol_id, message_id, token, payload, agent_id, _ = (
                    _RECORD.unpack(raw)
                )
                if length < 4 or length > 12:
                    raise MalformedMessage(f"bad length {length}")
                cmd = _decode_payload(protocol_id, message_id, payload[: length - 4], agent_id)
            except (MalformedMessage, struct.error) as exc:
                log.warning("channel %d: dropping malformed message (%s)", ch, exc)
                region._write_record(ch, b"\x00" * CHANNEL_SIZE)
                continue
            if isinstance(cmd, BaseVersion):
                resp_payload = struct.pack("<iI", SCMI_SUCCESS, IMPLEMENTATION_VERSION)
            else:
                resp_payload = struct.pack("<iI", SCMI_SUCCESS, 0)
            response = _RECORD.pack(
                STATUS_FREE,
                FLAG_RESPONSE,
                4 + len(resp_payload),
                protocol_id,
                message_id,
                token,
                resp_payload,
                agent_id,
                b"\x00" * 12,
            )
            region._write_record(ch, response)
            commands.append(cmd)
    return commands


def hexdump(region: MailboxRegion, channels: list[int] | None = None) -> str:
    """Debugging view of the raw channel records."""
    lines = []
    for ch in channels if channels is not None else range(region.channel_count):
        raw = region.channel_bytes(ch)
        if channels is None and raw == b"\x00" * CHANNEL_SIZE and not region.doorbell[ch]:
            continue
        bell = "*" if region.doorbell[ch] else " "
        hexed = " ".join(raw[i : i + 4].hex() for i in range(0, CHANNEL_SIZE, 4))
        lines.append(f"ch{ch:02d}{bell} {hexed}")
    return "\n".join(lines)
