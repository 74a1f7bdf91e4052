import math

import numpy as np
import pytest

import dmatwin


def test_fspl_and_throughput():
    assert dmatwin.fspl_db(1.0, 62e9) == pytest.approx(68.28, abs=0.05)
    assert dmatwin.net_throughput_bps(2e6, 5 / 6) == pytest.approx(2e6 * 2 * 5 / 6 * 188 / 204, rel=1e-12)


def test_pattern_shapes_and_broadside():
    angles, dbi = dmatwin.pattern("1" * 16)
    assert angles.shape == dbi.shape == (721,)
    assert np.all(np.diff(angles) > 0)
    s = dmatwin.beam_summary(0xFFFF)
    assert abs(s.mld_deg) <= 2.0
    assert s.n_beams >= 1


def test_code_text_radix():
    v = dmatwin.parse_code_text("1010101010101010", "bin")
    assert v == dmatwin.parse_code_text("AAAA", "hex") == dmatwin.parse_code_text("43690", "dec") == 0xAAAA
    assert dmatwin.parse_code_text("1001001001001001", "bin") == 0x9249
    with pytest.raises(IndexError):
        dmatwin.parse_code_text("65536", "dec")
    with pytest.raises(ValueError):
        dmatwin.parse_code_text("12", "bin")


def test_codec_and_emulator():
    frame = dmatwin.encode_set_code(0xAAAA)
    assert frame == bytes([0xAA, 0x01, 0x02, 0xAA, 0xAA, 0x01 ^ 0x02])
    assert dmatwin.decode_status(b"\x00\x13" + frame) == ("ok", 2 + len(frame))
    bad = bytearray(frame)
    bad[-1] ^= 1
    assert dmatwin.decode_status(bytes(bad))[0] == "frame_error"

    stream = (dmatwin.encode_code_list([0x9249, 0x0F0F]) + dmatwin.encode_switch_interval(100)
              + dmatwin.encode_multi_mode(True))
    tl = dmatwin.emulate(stream, 1000)
    assert tl[0] == (1, 0x9249)
    ticks = [t for t, _ in tl]
    assert all(b - a == 100 for a, b in zip(ticks, ticks[1:]))
    assert dmatwin.switching_rate_ratio(1, 2e6) == pytest.approx(50.0)


def test_rs_roundtrip():
    msg = bytes(range(188))
    cw = bytearray(dmatwin.rs_encode(msg))
    assert len(cw) == 204
    for i in range(8):
        cw[i * 20] ^= 0x5A
    data, corrected, bad = dmatwin.rs_decode(bytes(cw))
    assert data == msg and corrected == 8 and not bad


def test_link_high_snr_recovers():
    payload = bytes((i * 7) & 0xFF for i in range(3000))
    r = dmatwin.simulate_link(payload, 30.0, 3)
    assert r["recovered"] and r["payload"] == payload
    assert r["postfec_ber"] == 0.0
    assert not math.isnan(r["evm_pct"])
