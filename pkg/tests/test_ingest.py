#!/usr/bin/env python
"""Tests for UDP payload ingestion."""

import socket
import threading
import time

import pytest

from mimo_jrc.cli import EXIT_OK, EXIT_STAGE, main
from mimo_jrc.ingest import PacketQueue, UdpIngest, ingest_packets
from mimo_jrc.io import read_iq


def _send(address, *datagrams):
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        for datagram in datagrams:
            sock.sendto(datagram, address)


def _free_port():
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_queue_is_fifo():
    queue = PacketQueue(4)
    for payload in (b"a", b"b", b"c"):
        assert queue.put(payload)
    assert len(queue) == 3
    assert [queue.get(), queue.get(), queue.get()] == [b"a", b"b", b"c"]
    assert len(queue) == 0


def test_queue_drops_oldest():
    queue = PacketQueue(2)
    for payload in (b"a", b"b", b"c", b"d"):
        queue.put(payload)
    assert queue.drain() == [b"c", b"d"]
    assert queue.stats == {"accepted": 4, "dropped": 2, "rejected_empty": 0, "rejected_oversize": 0}


def test_queue_rejects_empty_and_oversize():
    queue = PacketQueue(4, max_payload=8)
    assert not queue.put(b"")
    assert not queue.put(bytes(9))
    assert queue.put(bytes(8))
    assert queue.stats["rejected_empty"] == 1
    assert queue.stats["rejected_oversize"] == 1
    assert len(queue) == 1


def test_queue_get_times_out():
    queue = PacketQueue()
    start = time.monotonic()
    assert queue.get(timeout=0.05) is None
    assert time.monotonic() - start >= 0.04


def test_queue_get_wakes_on_put():
    queue = PacketQueue()
    threading.Timer(0.05, queue.put, args=(b"late",)).start()
    assert queue.get(timeout=5.0) == b"late"


def test_queue_capacity():
    with pytest.raises(AssertionError):
        PacketQueue(0)


def test_udp_ingest():
    ingest = ingest_packets(capacity=8)
    try:
        _send(ingest.address, b"first", b"second", b"third")
        received = [ingest.queue.get(timeout=2.0) for _ in range(3)]
    finally:
        ingest.stop(timeout=2.0)
    assert received == [b"first", b"second", b"third"]
    assert ingest.datagrams == 3
    assert not ingest.is_alive()


def test_udp_ingest_context_manager():
    queue = PacketQueue(max_payload=4)
    with UdpIngest(queue) as ingest:
        _send(ingest.address, b"too long", b"ok")
        assert queue.get(timeout=2.0) == b"ok"
    assert not ingest.is_alive()
    assert queue.stats["rejected_oversize"] == 1


def test_udp_ingest_bind_failure():
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.bind(("127.0.0.1", 0))
        with pytest.raises(OSError):
            UdpIngest(PacketQueue(), *sock.getsockname())


def test_tx_listens_for_payloads(tmp_path):
    port = _free_port()
    args = ["tx", "--config", "paper-defaults", "--out", str(tmp_path), "--frames", "2"]
    args += ["--listen", f"127.0.0.1:{port}", "--listen-seconds", "10"]
    result = {}
    worker = threading.Thread(target=lambda: result.update(code=main(args)))
    worker.start()
    # datagrams sent before the socket is bound are lost, so keep sending
    while worker.is_alive():
        _send(("127.0.0.1", port), b"x" * 60)
        time.sleep(0.02)
    worker.join()
    assert result["code"] == EXIT_OK
    _, sidecar = read_iq(tmp_path / "tx_ch0.cf32")
    assert len(sidecar.frame_markers) == 2


def test_tx_listen_without_payloads(tmp_path):
    args = ["tx", "--config", "paper-defaults", "--out", str(tmp_path), "--listen", "127.0.0.1:0"]
    assert main([*args, "--listen-seconds", "0.1"]) == EXIT_STAGE
    assert main([*args, "--listen-seconds", "0.1", "--ndp"]) == EXIT_OK


def test_ingest_into_given_queue():
    queue = PacketQueue(4)
    ingest = ingest_packets(queue=queue)
    try:
        assert ingest.queue is queue
        _send(ingest.address, b"payload")
        assert queue.get(timeout=2.0) == b"payload"
    finally:
        ingest.stop(timeout=2.0)
