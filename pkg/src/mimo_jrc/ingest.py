"""UDP datagram ingestion: every datagram becomes the payload of one DATA frame."""

import socket
import threading
from collections import deque
from typing import Dict, List, Optional, Tuple

from mimo_jrc.tx.stream_encoder import MAX_PAYLOAD_LEN
from mimo_jrc.utils import get_logger, ifnone

logger = get_logger(__name__)

_MAX_DATAGRAM = 65535


class PacketQueue:
    """Bounded FIFO of payloads that drops its oldest entry when full.

    Args:
        capacity: number of payloads held
        max_payload: largest accepted payload in bytes

    """

    def __init__(self, capacity: int = 64, max_payload: int = MAX_PAYLOAD_LEN):
        assert capacity > 0, "capacity should be greater than 0"
        self.capacity = capacity
        self.max_payload = max_payload
        self._items = deque()
        self._cond = threading.Condition()
        self.accepted = 0
        self.dropped = 0
        self.rejected_empty = 0
        self.rejected_oversize = 0

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)

    def put(self, payload: bytes) -> bool:
        """Queues ``payload``. Empty and oversize payloads are counted and refused."""
        if not payload:
            self.rejected_empty += 1
            logger.warning("Empty datagram rejected")
            return False
        if len(payload) > self.max_payload:
            self.rejected_oversize += 1
            logger.warning(f"Datagram of {len(payload)} bytes rejected, the limit is {self.max_payload}")
            return False
        with self._cond:
            if len(self._items) == self.capacity:
                self._items.popleft()
                self.dropped += 1
                logger.warning("Packet queue full, oldest payload dropped")
            self._items.append(bytes(payload))
            self.accepted += 1
            self._cond.notify()
        return True

    def get(self, timeout: Optional[float] = None) -> Optional[bytes]:
        """Oldest payload, waiting up to ``timeout`` seconds. None when nothing arrived."""
        with self._cond:
            if not self._cond.wait_for(lambda: len(self._items) > 0, timeout=timeout):
                return None
            return self._items.popleft()

    def drain(self) -> List[bytes]:
        with self._cond:
            items = list(self._items)
            self._items.clear()
        return items

    @property
    def stats(self) -> Dict[str, int]:
        return {
            "accepted": self.accepted,
            "dropped": self.dropped,
            "rejected_empty": self.rejected_empty,
            "rejected_oversize": self.rejected_oversize,
        }


class UdpIngest(threading.Thread):
    """Receives datagrams on a bound UDP socket and feeds them to a :class:`PacketQueue`.

    The socket is bound on construction, so a bind failure surfaces as ``OSError`` in the
    caller's thread.

    """

    def __init__(self, queue: PacketQueue, host: str = "127.0.0.1", port: int = 0, poll_interval: float = 0.1):
        super().__init__(name="udp-ingest", daemon=True)
        self.queue = queue
        self._stop_event = threading.Event()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            self._sock.bind((host, port))
        except OSError:
            self._sock.close()
            raise
        self._sock.settimeout(poll_interval)
        self.datagrams = 0

    @property
    def address(self) -> Tuple[str, int]:
        return self._sock.getsockname()

    def run(self) -> None:
        logger.info(f"Listening for payloads on {self.address[0]}:{self.address[1]}")
        while not self._stop_event.is_set():
            try:
                datagram, _ = self._sock.recvfrom(_MAX_DATAGRAM)
            except socket.timeout:
                continue
            except OSError as e:
                if not self._stop_event.is_set():
                    logger.error(f"Socket error, ingestion stopped: {e}")
                break
            self.datagrams += 1
            self.queue.put(datagram)

    def stop(self, timeout: Optional[float] = None) -> None:
        self._stop_event.set()
        if self.is_alive():
            self.join(timeout)
        self._sock.close()

    def __enter__(self) -> "UdpIngest":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def ingest_packets(
    host: str = "127.0.0.1",
    port: int = 0,
    queue: Optional[PacketQueue] = None,
    capacity: int = 64,
    max_payload: int = MAX_PAYLOAD_LEN,
) -> UdpIngest:
    """Binds ``host:port`` and starts a thread queueing every datagram received there.

    Raises:
        OSError: the endpoint cannot be bound

    """
    ingest = UdpIngest(ifnone(queue, PacketQueue(capacity, max_payload)), host, port)
    ingest.start()
    return ingest
