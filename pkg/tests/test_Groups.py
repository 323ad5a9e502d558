#!/usr/bin/env python3

import os
import sys
sys.path.append(os.path.abspath('./'))

import pytest
from hypothesis import given, settings, strategies as st

from opengke.errors import MembershipError, NonInvertibleError, ParameterError
from opengke.groups import (GroupParams, PRESETS, Scalar, decode_element,
                            encode_element, exp, invert, is_probable_prime,
                            load_group, mul, sample_scalar, scalar_add,
                            scalar_invert, scalar_mul, scalar_neg)
from opengke.utils import RNG, fingerprint


tiny = load_group('tiny')
medium = load_group('medium')

# every member of the order-11 subgroup mod 23
tiny_subgroup = [exp(tiny.generator, e) for e in range(11)]


## Presets and validation ##


def test_presets():
    assert (tiny.p, tiny.q, tiny.g) == (23, 11, 4)
    assert (medium.p, medium.q, medium.g) == (2039, 1019, 4)
    for name in PRESETS:
        group = load_group(name)
        assert group.p == 2 * group.q + 1
        assert group.name == name


def test_large_presets_validate():
    for name in ('modp768', 'modp1024', 'modp2048'):
        p, q, g = PRESETS[name]
        group = GroupParams(p, q, g)
        assert pow(g, q, p) == 1
        assert group.byte_length == p.bit_length() // 8


def test_composite_modulus():
    with pytest.raises(ParameterError):
        load_group(p=15, q=7, g=2)


def test_bad_groups():
    # q does not divide p - 1
    with pytest.raises(ParameterError):
        load_group(p=23, q=7, g=4)
    # 5 is not a quadratic residue mod 23, so its order is 22
    with pytest.raises(ParameterError):
        load_group(p=23, q=11, g=5)
    with pytest.raises(ParameterError):
        load_group(p=23, q=11, g=1)
    with pytest.raises(ParameterError):
        load_group('nonesuch')
    with pytest.raises(ParameterError):
        load_group('tiny', p=23, q=11, g=4)
    with pytest.raises(ParameterError):
        load_group(p=23, q=11)


def test_custom_hex():
    group = load_group(p='0x17', q='11', g='0x4')
    assert group == tiny


def test_is_probable_prime():
    assert is_probable_prime(2039)
    assert is_probable_prime(1019)
    assert not is_probable_prime(15)
    assert not is_probable_prime(1)
    assert not is_probable_prime(561)  # Carmichael


## Element arithmetic ##


def test_exp():
    g = tiny.generator
    assert exp(g, 5) == tiny.element(12)
    assert exp(g, 11) == tiny.identity
    for a in tiny_subgroup:
        assert exp(a, 0) == tiny.identity
    assert exp(g, Scalar(5, tiny)) == tiny.element(12)
    assert g ** 5 == tiny.element(12)


def test_mul_invert():
    assert mul(tiny.element(16), tiny.element(13)) == tiny.identity
    assert invert(tiny.element(4)) == tiny.element(6)
    for a in tiny_subgroup:
        assert mul(a, tiny.identity) == a
        assert a * a.inverse() == tiny.identity


def test_closure():
    for a in tiny_subgroup:
        for b in tiny_subgroup:
            assert tiny.contains(mul(a, b).value)
        assert tiny.contains(invert(a).value)
        for e in range(11):
            assert tiny.contains(exp(a, e).value)


def test_subgroup_size():
    assert len(set(tiny_subgroup)) == 11
    assert sorted(a.value for a in tiny_subgroup) == \
        [v for v in range(1, 23) if tiny.contains(v)]


def test_element_membership():
    with pytest.raises(MembershipError):
        tiny.element(5)
    with pytest.raises(MembershipError):
        tiny.element(0)
    with pytest.raises(MembershipError):
        tiny.element(23)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 1018), st.integers(0, 1018))
def test_exp_commutes(a, b):
    a, b = Scalar(a, medium), Scalar(b, medium)
    g = medium.generator
    assert exp(exp(g, a), b) == exp(g, scalar_mul(a, b))
    assert exp(exp(g, a), b) == exp(exp(g, b), a)
    assert mul(exp(g, a), exp(g, b)) == exp(g, scalar_add(a, b))


## Scalars ##


def test_scalar_reduction():
    assert Scalar(13, tiny) == 2
    assert Scalar(-1, tiny) == 10
    assert scalar_neg(Scalar(3, tiny)) == 8
    assert Scalar(7, tiny) + Scalar(9, tiny) == 5
    assert Scalar(7, tiny) * 3 == 10
    assert not Scalar(11, tiny)


def test_scalar_invert():
    assert scalar_invert(Scalar(2, tiny)) == 6
    assert scalar_invert(Scalar(1, tiny)) == 1
    with pytest.raises(NonInvertibleError):
        scalar_invert(Scalar(0, tiny))
    for a in range(1, 11):
        s = Scalar(a, tiny)
        assert s * s.inverse() == 1


def test_sample_scalar():
    rng = RNG(42)
    first = [sample_scalar(rng, medium).value for _ in range(50)]
    rng = RNG(42)
    assert [sample_scalar(rng, medium).value for _ in range(50)] == first

    rng = RNG()
    values = set(sample_scalar(rng, tiny).value for _ in range(10000))
    assert values == set(range(1, 11))


def test_sampler_uniformity():
    rng = RNG()
    draw = lambda: sample_scalar(rng, tiny).value
    # 10 categories, 9 degrees of freedom, p = 0.001
    assert rng.chi_square(10, 10000, draw) < 27.877


## Encoding ##


def test_encode_identity():
    assert encode_element(tiny.identity) == bytes([0, 0, 0, 1, 1])


def test_encoding_round_trip():
    encodings = set()
    for a in tiny_subgroup:
        data = encode_element(a)
        assert decode_element(data, tiny) == a
        encodings.add(data)
    assert len(encodings) == 11


def test_decode_rejects():
    with pytest.raises(MembershipError):
        decode_element(bytes([0, 0, 0, 1, 5]), tiny)
    with pytest.raises(MembershipError):
        decode_element(bytes([0, 0, 0, 2, 0, 4]), tiny)  # non-minimal
    with pytest.raises(MembershipError):
        decode_element(bytes([0, 0, 0, 2, 4]), tiny)  # short body
    with pytest.raises(MembershipError):
        decode_element(bytes([0, 0, 0]), tiny)


def test_large_element_encoding():
    group = load_group('modp2048')
    a = exp(group.generator, 123456789)
    data = bytes(a)
    assert len(data) == 4 + (a.value.bit_length() + 7) // 8
    assert decode_element(data, group) == a


def test_fingerprint():
    # every tiny element shares the length header
    assert set(bytes(a).hex()[:8] for a in tiny_subgroup) == {'00000001'}
    assert len(set(fingerprint(a) for a in tiny_subgroup)) == 11
    assert fingerprint(tiny.identity) == fingerprint(tiny.element(1))
