import socket
import sys
import threading

import numpy as np
import pytest

from tata.embfile import write_embedding_file
from tata.encoders import FixtureCacheEncoder, RemoteEncoder, open_encoder
from tata.errors import EncoderError, EncoderTimeoutError, ProtocolError
from tata.numerics import l2_normalize

import stub_encoder

STUB = [sys.executable, str(__import__("pathlib").Path(__file__).parent / "stub_encoder.py")]


def spawn_stub(*extra):
    return RemoteEncoder.spawn(STUB + list(extra), timeout=5.0)


def tcp_stub_server(table=None):
    """One-connection TCP server running the stub handler in a thread."""
    handle = stub_encoder.make_handler(table)
    server = socket.socket()
    server.bind(("127.0.0.1", 0))
    server.listen(1)
    port = server.getsockname()[1]

    def serve():
        conn, _ = server.accept()
        buffer = b""
        try:
            while True:
                chunk = conn.recv(65536)
                if not chunk:
                    break
                buffer += chunk
                while b"\n" in buffer:
                    line, buffer = buffer.split(b"\n", 1)
                    if line.strip():
                        for response in handle(line.decode()):
                            conn.sendall(response.encode() + b"\n")
        finally:
            conn.close()
            server.close()

    thread = threading.Thread(target=serve, daemon=True)
    thread.start()
    return port


class TestFixtureCache:
    def test_lookup_byte_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        rows = np.array([l2_normalize(rng.standard_normal(8)) for _ in range(3)])
        path = tmp_path / "cache.emb"
        prompts = ["a photo of a cat", "a photo of a dog", "a photo of a eel"]
        write_embedding_file(path, rows, {"ids": prompts, "kind": "class_prompts"})
        encoder = FixtureCacheEncoder.from_file(path)
        got = encoder.encode_texts(["a photo of a dog"])
        stored = rows.astype("<f4").astype(np.float64)
        assert got[0].tobytes() == stored[1].tobytes()

    def test_unknown_prompt(self, tmp_path):
        encoder = FixtureCacheEncoder(["known"], np.ones((1, 4)))
        with pytest.raises(EncoderError):
            encoder.encode_texts(["unknown"])


class TestRemoteEncoder:
    def test_out_of_order_pipelined_responses(self):
        encoder = spawn_stub()
        try:
            # HOLD delays the first response until after the second
            out = encoder.encode_texts(["HOLD:alpha", "beta"])
            expect_alpha = stub_encoder.hash_vector("alpha")
            expect_beta = stub_encoder.hash_vector("beta")
            np.testing.assert_allclose(out[0], expect_alpha, atol=1e-12)
            np.testing.assert_allclose(out[1], expect_beta, atol=1e-12)
        finally:
            encoder.close()

    def test_wrong_dim_is_protocol_error(self):
        encoder = spawn_stub()
        try:
            with pytest.raises(ProtocolError):
                encoder.encode_texts(["WRONGDIM:x"])
        finally:
            encoder.close()

    def test_error_relayed(self):
        encoder = spawn_stub()
        try:
            with pytest.raises(EncoderError, match="stub failure"):
                encoder.encode_texts(["ERR:broken"])
        finally:
            encoder.close()

    def test_timeout(self):
        encoder = RemoteEncoder.spawn(STUB, timeout=0.3)
        try:
            with pytest.raises(EncoderTimeoutError):
                encoder.encode_texts(["SLEEP:1.2:slow"])
        finally:
            encoder.close()

    def test_tcp_transport(self):
        port = tcp_stub_server()
        encoder = RemoteEncoder.connect_tcp("127.0.0.1", port, timeout=5.0)
        out = encoder.encode_texts(["HOLD:one", "two", "three"])
        np.testing.assert_allclose(out[0], stub_encoder.hash_vector("one"), atol=1e-12)
        np.testing.assert_allclose(out[2], stub_encoder.hash_vector("three"), atol=1e-12)
        encoder.close()


class TestContractParity:
    """Fixture cache and remote client are substitutable."""

    def test_same_vectors_from_both(self, tmp_path):
        rng = np.random.default_rng(2)
        prompts = [f"a photo of a thing {i}" for i in range(4)]
        rows = np.array([l2_normalize(rng.standard_normal(8)) for _ in range(4)])
        path = tmp_path / "cache.emb"
        write_embedding_file(path, rows, {"ids": prompts, "kind": "class_prompts"})

        fixture = FixtureCacheEncoder.from_file(path)
        remote = spawn_stub("--table", str(path))
        try:
            want = fixture.encode_texts(prompts)
            got = remote.encode_texts(prompts)
            assert got.tobytes() == want.tobytes()
        finally:
            remote.close()

    def test_both_reject_unknown_prompts(self, tmp_path):
        rng = np.random.default_rng(3)
        path = tmp_path / "cache.emb"
        write_embedding_file(
            path,
            np.array([l2_normalize(rng.standard_normal(8))]),
            {"ids": ["a photo of a cat"]},
        )
        fixture = FixtureCacheEncoder.from_file(path)
        remote = spawn_stub("--table", str(path))
        try:
            for encoder in (fixture, remote):
                with pytest.raises(EncoderError):
                    encoder.encode_texts(["a photo of a yeti"])
        finally:
            remote.close()


class TestOpenEncoder:
    def test_fixture_spec(self, tmp_path):
        rng = np.random.default_rng(4)
        path = tmp_path / "cache.emb"
        write_embedding_file(
            path, np.array([l2_normalize(rng.standard_normal(8))]), {"ids": ["p"]}
        )
        encoder = open_encoder(f"fixture:{path}")
        assert encoder.encode_texts(["p"]).shape == (1, 8)

    def test_bad_spec(self):
        with pytest.raises(ProtocolError):
            open_encoder("carrier-pigeon:coop")
