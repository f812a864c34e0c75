import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from locsim.encodings import (READ, WRITE, EncoderState, EncodingError, EncodingSpec, crt, decode,
                              encode, mask_update)
from locsim.presets import ENCODINGS

M = 0xABCD123


def test_reference_values():
    s = EncoderState()
    assert encode(EncodingSpec.base(), s, 100) == [100]
    assert encode(EncodingSpec.offset_enc(24), s, 100) == [124]
    assert encode(EncodingSpec.xor(M), s, 0) == [0x0ABCD123]
    # independent big-integer modulo oracle
    assert encode(EncodingSpec.rnc((89, 97, 93)), s, 100) == [100 % 89, 100 % 97, 100 % 93] == [11, 3, 7]


def test_rnc_decode_brute_force():
    spec = EncodingSpec.rnc((2, 3, 5))
    assert decode(spec, EncoderState(footprint=3), [0, 0, 2]) == 12
    for a in range(30):
        res = [a % 2, a % 3, a % 5]
        matches = [v for v in range(30) if [v % 2, v % 3, v % 5] == res]
        assert matches == [a]
        assert crt(res, (2, 3, 5)) == a


def test_xor_add_inverse():
    spec = EncodingSpec.xor_add(M, 17)
    for x in (0, 17, 0xFFFFFFFF, 123456789):
        assert decode(spec, EncoderState(), [x]) == ((x - 17) % 2 ** 32) ^ M


def test_offset_wraps_and_negative():
    spec = EncodingSpec.offset_enc(-5)
    s = EncoderState()
    assert encode(spec, s, 3) == [2 ** 32 - 2]
    assert decode(spec, s, [2 ** 32 - 2]) == 3


def test_rnc_domain_errors():
    spec = EncodingSpec.rnc((2, 3, 5))
    with pytest.raises(EncodingError):
        encode(spec, EncoderState(footprint=3), 30)
    with pytest.raises(EncodingError):
        decode(spec, EncoderState(footprint=3), [0, 3, 0])
    with pytest.raises(EncodingError):
        EncodingSpec.rnc((4, 6))


def test_mask_update_rules():
    uow = EncodingSpec.dyn_xor("uow", 1, M)
    s = EncoderState.for_spec(uow, seed=1)
    for _ in range(20):
        old = s.current_mask
        assert mask_update(uow, s, WRITE) is True
        assert s.current_mask != old
        assert mask_update(uow, s, READ) is False
    uor = EncodingSpec.dyn_xor("uor", 1, M)
    s = EncoderState.for_spec(uor, seed=1)
    assert mask_update(uor, s, WRITE) is False
    with pytest.raises(EncodingError):
        mask_update(EncodingSpec.xor(M), EncoderState(), READ)


def test_uor_update_rate_binomial():
    spec = EncodingSpec.dyn_xor("uor", 300, M)
    s = EncoderState.for_spec(spec, seed=42)
    events = 300_000
    count = sum(mask_update(spec, s, READ) for _ in range(events))
    p = 1 / 300
    mean, sd = events * p, math.sqrt(events * p * (1 - p))
    assert abs(count - mean) <= 3 * sd


def test_deterministic_period():
    spec = EncodingSpec.dyn_xor("uow", 2, M, deterministic_period=True)
    s = EncoderState.for_spec(spec)
    assert [mask_update(spec, s, WRITE) for _ in range(6)] == [False, True] * 3


def test_same_seed_same_mask_trajectory():
    spec = EncodingSpec.dyn_xor("uor", 3, M)
    a, b = EncoderState.for_spec(spec, 9), EncoderState.for_spec(spec, 9)
    ta = [(mask_update(spec, a, READ), a.current_mask) for _ in range(200)]
    tb = [(mask_update(spec, b, READ), b.current_mask) for _ in range(200)]
    assert ta == tb


def test_dynamic_word_is_value_xor_current_mask():
    spec = EncodingSpec.dyn_xor("uor", 2, M)
    s = EncoderState.for_spec(spec, 3)
    for a in range(50):
        mask_update(spec, s, READ)
        assert encode(spec, s, a) == [a ^ s.current_mask]


def test_json_round_trip():
    for game in ENCODINGS.values():
        for spec in game.values():
            obj = spec.to_json()
            assert EncodingSpec.from_json(obj) == spec
    assert EncodingSpec.xor(M).to_json()["M"].lower() == "0xabcd123"


@settings(max_examples=300)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2 ** 32 - 1), st.integers(-2 ** 31, 2 ** 31 - 1))
def test_round_trip_property(a, m, o):
    s = EncoderState()
    for spec in (EncodingSpec.base(), EncodingSpec.offset_enc(o), EncodingSpec.xor(m),
                 EncodingSpec.add_xor(o, m), EncodingSpec.xor_add(m, o)):
        assert decode(spec, s, encode(spec, s, a)) == a


@given(st.integers(0, 89 * 97 * 93 - 1))
def test_rnc_residue_property(a):
    spec = EncodingSpec.rnc((89, 97, 93))
    words = encode(spec, EncoderState(footprint=3), a)
    for w, m in zip(words, spec.moduli):
        assert 0 <= w < m
        assert (a - w) >= 0 and (a - w) % m == 0


def test_round_trip_all_variants_bulk():
    rng = random.Random(0)
    for game in ENCODINGS.values():
        for spec in game.values():
            state = EncoderState.for_spec(spec, 1)
            top = spec.capacity if spec.kind == "rnc" else 2 ** 32
            for _ in range(2000):
                a = rng.randrange(top)
                assert decode(spec, state, encode(spec, state, a)) == a


def test_vectorised_matches_scalar():
    from locsim.encodings import decode_many, encode_many
    rng = random.Random(5)
    for game in ENCODINGS.values():
        for spec in game.values():
            state = EncoderState.for_spec(spec, 2)
            top = spec.capacity if spec.kind == "rnc" else 2 ** 32
            values = [rng.randrange(top) for _ in range(300)]
            many = encode_many(spec, state, values)
            assert many.tolist() == [encode(spec, state, a) for a in values]
            assert decode_many(spec, state, many).tolist() == values
    with pytest.raises(EncodingError):
        decode_many(EncodingSpec.rnc((2, 3, 5)), EncoderState(footprint=3), [[0, 3, 0]])
