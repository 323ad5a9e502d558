"""Canonical JSON wire form of keying messages, petitions and partials.

Elements travel as the lowercase hex of their canonical byte encoding (see
groups.encode_element). Objects are serialized with sorted keys and no
whitespace, so equal values always produce equal bytes.
"""


import json

from ..core import JoinPetition, KeyingMessage, VARIANTS
from ..errors import GKEError, WireError
from ..groups import Element, decode_element


## Useful functions ##


def dumps(obj):
    """Canonical JSON text for `obj`"""

    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def element_to_hex(e):
    return bytes(e).hex()


def element_from_hex(s, group, check=True):
    """Decode a hex element.

    With `check=False` only the framing is validated and subgroup membership
    is left to the caller (verification reports it instead of raising).
    """

    if not isinstance(s, str) or s != s.lower():
        raise WireError("elements are lowercase hex strings")
    try:
        data = bytes.fromhex(s)
    except ValueError:
        raise WireError("not a hex string: %r" % s[:16])

    if check:
        return decode_element(data, group)

    if len(data) <= 4 or int.from_bytes(data[:4], 'big') != len(data) - 4:
        raise WireError("bad length prefix")
    return Element(int.from_bytes(data[4:], 'big'), group)


def _field(d, name, kind=None):
    if not isinstance(d, dict) or name not in d:
        raise WireError("missing field %r" % name)
    v = d[name]
    if kind is not None and not isinstance(v, kind):
        raise WireError("field %r has the wrong type" % name)
    return v


## Keying messages ##


def message_to_dict(msg):
    return {
        'epoch': msg.epoch,
        'variant': msg.variant,
        'controller': msg.controller,
        'roster': msg.roster,
        'slots': {str(i): element_to_hex(y) for i, y in msg.slots.items()},
        'R': element_to_hex(msg.R),
        'S': element_to_hex(msg.S) if msg.S is not None else None,
    }


def message_from_dict(d, group, check=True):
    """Rebuild a KeyingMessage from its wire dict.

    Raises:
        WireError: missing fields, or roster and slots disagree
        MembershipError: an element is outside the subgroup (check=True)
    """

    epoch = _field(d, 'epoch', int)
    variant = _field(d, 'variant', str)
    if variant not in VARIANTS:
        raise WireError("unknown variant %r" % variant)
    controller = _field(d, 'controller', int)
    roster = _field(d, 'roster', list)
    raw_slots = _field(d, 'slots', dict)

    slots = {}
    for i, y in raw_slots.items():
        if not i.isdigit():
            raise WireError("slot ids are decimal member ids, got %r" % i)
        slots[int(i)] = element_from_hex(y, group, check)

    if sorted(slots) != roster:
        raise WireError("roster does not match slot ids")

    R = element_from_hex(_field(d, 'R', str), group, check)
    S = d.get('S')
    if S is not None:
        S = element_from_hex(S, group, check)

    try:
        return KeyingMessage(epoch, variant, controller, slots, R, S)
    except GKEError as e:
        raise WireError("%s: %s" % (type(e).__name__, e))


def encode_message(msg):
    return dumps(message_to_dict(msg))


def decode_message(s, group):
    try:
        d = json.loads(s)
    except ValueError as e:
        raise WireError("not JSON: %s" % e)
    return message_from_dict(d, group)


## Petitions ##


def petition_to_dict(p):
    return {
        'joiner': p.joiner,
        'blinded_r': element_to_hex(p.blinded_r),
        'blinded_x': element_to_hex(p.blinded_x),
    }


def petition_from_dict(d, group, check=True):
    joiner = _field(d, 'joiner', int)
    blinded_r = element_from_hex(_field(d, 'blinded_r', str), group, check)
    blinded_x = element_from_hex(_field(d, 'blinded_x', str), group, check)
    return JoinPetition(joiner, blinded_r, blinded_x, check=check)


## Published keys and partials ##


def keys_to_dict(pub_r, pub_x=None):
    d = {'pub_r': element_to_hex(pub_r)}
    if pub_x is not None:
        d['pub_x'] = element_to_hex(pub_x)
    return d


def keys_from_dict(d, group, check=True):
    pub_r = element_from_hex(_field(d, 'pub_r', str), group, check)
    pub_x = d.get('pub_x')
    if pub_x is not None:
        pub_x = element_from_hex(pub_x, group, check)
    return pub_r, pub_x


def partial_to_dict(value):
    return {'partial': element_to_hex(value)}


def partial_from_dict(d, group, check=True):
    return element_from_hex(_field(d, 'partial', str), group, check)
