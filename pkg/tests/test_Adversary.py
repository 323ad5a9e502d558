#!/usr/bin/env python3

import os
import sys
sys.path.append(os.path.abspath('./'))

import json

import pytest

from opengke.adversary import (AdversaryView, attack_real_protocol,
                               attack_report, capture_view, product_attack,
                               scan_view, single_key_ika, single_key_report)
from opengke.core import (KeyPair, P1, ika1_build_keying, new_member,
                          partial_product, publish_keys)
from opengke.errors import AttackInapplicableError, DegenerateError
from opengke.groups import Scalar, exp, load_group, sample_scalar
from opengke.netsim import load_scenario, run_scenario
from opengke.utils import RNG, fingerprint, prod


tiny = load_group('tiny')
medium = load_group('medium')
E = tiny.element

f1 = load_scenario('scenarios/f1.json')
f1_p2 = [dict(f1[0].to_dict(), variant='P2'), {'kind': 'rekey',
                                                'controller': 2}]


def scalars(group, ks):
    return {i: Scalar(k, group) for i, k in enumerate(ks, 1)}


## Single-key variant ##


def test_single_key_fixture():
    b, key = single_key_ika(scalars(tiny, (2, 3, 5, 7)), 1)
    assert key == E(9)
    assert b.messages == {2: E(16), 3: E(13), 4: E(12)}
    assert prod(b.messages.values(), tiny.identity) == E(12)
    assert product_attack(b) == E(9)
    assert product_attack(b, tiny.q) == key


def test_single_key_symmetry():
    b, key = single_key_ika(scalars(tiny, (4, 6, 6)), 1)
    assert b.messages[2] == b.messages[3]
    # n - 2 = 1: the product is the key itself
    assert prod(b.messages.values(), tiny.identity) == key
    assert product_attack(b) == key


def test_single_key_degenerate():
    with pytest.raises(DegenerateError):
        single_key_ika(scalars(tiny, (2, 3)), 1)
    with pytest.raises(DegenerateError):
        single_key_ika(scalars(tiny, (2, 3, 5)), 9)


def test_attack_inapplicable():
    b, key = single_key_ika(scalars(tiny, range(1, 14)), 1)
    assert b.n == 13
    with pytest.raises(AttackInapplicableError):
        product_attack(b)


def test_product_is_key_power():
    rng = RNG(5)
    for group in (tiny, medium):
        for _ in range(50):
            n = rng.randint(3, 12)
            ks = {i: sample_scalar(rng, group) for i in range(1, n + 1)}
            c = rng.randint(1, n)
            b, key = single_key_ika(ks, c)
            assert prod(b.messages.values(), group.identity) == \
                exp(key, n - 2)


def test_attack_recovers_key():
    rng = RNG(6)
    for group in (tiny, medium):
        for _ in range(250):
            n = rng.randint(3, 12)
            ks = {i: sample_scalar(rng, group) for i in range(1, n + 1)}
            b, key = single_key_ika(ks, rng.randint(1, n))
            assert product_attack(b) == key


def test_single_key_report():
    report = single_key_report(4, tiny, RNG(1))
    assert report['applicable']
    assert report['matches_true_key']
    assert report['n'] == 4
    with pytest.raises(AttackInapplicableError):
        single_key_report(13, tiny, RNG(1))


## Two-key protocols ##


def ika1(group, pairs, c, fresh=None, rng=None):
    members = {i: new_member(group, i, r=r, x=x, degenerate=fresh is not None)
               for i, (r, x) in pairs.items()}
    others = [i for i in members if i != c]
    published = {i: publish_keys(members[i]) for i in others}
    partials = {i: partial_product(members[i], published, c) for i in others}
    return ika1_build_keying(members[c], published, partials, rng or RNG(),
                             fresh)


def test_attack_fails_on_fixture():
    msg, key = ika1(tiny, {1: (2, 3), 2: (5, 7), 3: (8, 6)}, 1,
                    KeyPair(tiny, 9, 10))
    candidate = attack_real_protocol(msg)
    assert candidate == E(13)
    assert candidate != key


def test_attack_fails_randomized():
    rng = RNG(7)
    misses = 0
    for _ in range(200):
        n = rng.randint(4, 10)
        pairs = {i: (sample_scalar(rng, medium), sample_scalar(rng, medium))
                 for i in range(1, n + 1)}
        msg, key = ika1(medium, pairs, rng.randint(1, n), rng=rng)
        if attack_real_protocol(msg) != key:
            misses += 1
    assert misses >= 199


def test_attack_succeeds_without_second_key():
    pairs = {1: (2, 0), 2: (5, 0), 3: (8, 0), 4: (3, 0)}
    msg, key = ika1(tiny, pairs, 1, KeyPair(tiny, 9, 0, degenerate=True))
    assert attack_real_protocol(msg) == key


def test_attack_real_protocol_inapplicable():
    pairs = {i: (i % 10 + 1, 1) for i in range(1, 14)}
    msg, key = ika1(tiny, pairs, 1)
    with pytest.raises(AttackInapplicableError):
        attack_real_protocol(msg)


## Adversary view ##


def test_capture_view():
    t = run_scenario(f1, tiny, 7)
    view = capture_view(t)
    assert scan_view(view) == []
    text = view.to_jsonl()
    assert 'oracle' not in text
    for rec in view.records:
        assert 'oracle' not in rec

    kinds = [r['kind'] for r in view.records]
    assert kinds.count('keys') == 2
    assert kinds.count('partial') == 2
    assert kinds.count('petition') == 1
    assert kinds.count('keying') == 3
    published = [r['payload'] for r in view.records if r['kind'] == 'keys']
    assert all('pub_x' in p for p in published)


def test_capture_view_has_no_scalars():
    t = run_scenario(f1, tiny, 7)
    view = capture_view(t)
    # every payload value is a hex element, an id, a roster or a label
    for rec in view.records:
        for k, v in rec['payload'].items():
            assert k not in ('r', 'x', 'fresh', 'pairs_before', 'seed',
                             'derived', 'key')


def test_capture_view_p2():
    t = run_scenario(f1_p2, tiny, 7)
    view = capture_view(t)
    assert 'pub_x' not in view.to_jsonl()
    for rec in view.broadcasts():
        assert rec['payload']['S'] is None


def test_view_round_trip():
    view = capture_view(run_scenario(f1, tiny, 7))
    again = AdversaryView.from_jsonl(view.to_jsonl())
    assert again == view
    assert len(again) == len(view)


def test_scan_view_flags_leaks():
    view = capture_view(run_scenario(f1, tiny, 7))
    records = json.loads(json.dumps(view.records))
    records[1]['oracle'] = {'key': '00'}
    records[2]['payload']['r'] = '5'
    assert scan_view(AdversaryView(records)) == ['1.oracle',
                                                 '2.payload.r']


def test_attack_report():
    t = run_scenario(f1, tiny, 7)
    report = attack_report(t, tiny)
    assert report == {
        'variant': P1,
        'n': 3,
        'applicable': True,
        'recovered': fingerprint(E(13)),
        'matches_true_key': False,
    }


def test_attack_report_without_oracle():
    t = run_scenario(f1, tiny, 7)
    view = AdversaryView.from_jsonl(capture_view(t).to_jsonl())
    report = attack_report(view, tiny)
    assert report['applicable']
    assert report['recovered'] == fingerprint(E(13))
    assert report['matches_true_key'] is None
