"""Prime-order cyclic groups and scalar arithmetic modulo the group order.

The concrete group is the subgroup of quadratic residues modulo a safe prime
p = 2q + 1, which has prime order q. Private exponents are `Scalar`s (integers
mod q) and everything that travels on the wire is an `Element` (a residue mod
p of order dividing q).

None of the arithmetic here is constant time. This package models protocol
logic; do not use it to protect real traffic.
"""


import functools
import logging

import gmpy2

from .errors import MembershipError, NonInvertibleError, ParameterError
from .utils import parse_int


log = logging.getLogger(__name__)


MR_ROUNDS = 64
"""int: Miller-Rabin rounds used when validating p and q"""

LENGTH_PREFIX = 4
"""int: size of the big-endian length prefix of an encoded element"""


## Presets ##


def _hex(*blocks):
    return int(''.join(blocks).replace(' ', ''), 16)


# Oakley group 1 (RFC 2409)
_MODP768 = _hex(
    'FFFFFFFF FFFFFFFF C90FDAA2 2168C234 C4C6628B 80DC1CD1'
    '29024E08 8A67CC74 020BBEA6 3B139B22 514A0879 8E3404DD'
    'EF9519B3 CD3A431B 302B0A6D F25F1437 4FE1356D 6D51C245'
    'E485B576 625E7EC6 F44C42E9 A63A3620 FFFFFFFF FFFFFFFF')

# Oakley group 2 (RFC 2409)
_MODP1024 = _hex(
    'FFFFFFFF FFFFFFFF C90FDAA2 2168C234 C4C6628B 80DC1CD1'
    '29024E08 8A67CC74 020BBEA6 3B139B22 514A0879 8E3404DD'
    'EF9519B3 CD3A431B 302B0A6D F25F1437 4FE1356D 6D51C245'
    'E485B576 625E7EC6 F44C42E9 A637ED6B 0BFF5CB6 F406B7ED'
    'EE386BFB 5A899FA5 AE9F2411 7C4B1FE6 49286651 ECE65381'
    'FFFFFFFF FFFFFFFF')

# RFC 3526, section 3
_MODP2048 = _hex(
    'FFFFFFFF FFFFFFFF C90FDAA2 2168C234 C4C6628B 80DC1CD1'
    '29024E08 8A67CC74 020BBEA6 3B139B22 514A0879 8E3404DD'
    'EF9519B3 CD3A431B 302B0A6D F25F1437 4FE1356D 6D51C245'
    'E485B576 625E7EC6 F44C42E9 A637ED6B 0BFF5CB6 F406B7ED'
    'EE386BFB 5A899FA5 AE9F2411 7C4B1FE6 49286651 ECE45B3D'
    'C2007CB8 A163BF05 98DA4836 1C55D39A 69163FA8 FD24CF5F'
    '83655D23 DCA3AD96 1C62F356 208552BB 9ED52907 7096966D'
    '670C354E 4ABC9804 F1746C08 CA18217C 32905E46 2E36CE3B'
    'E39E772C 180E8603 9B2783A2 EC07A28F B5C55DF0 6F4C52C9'
    'DE2BCBF6 95581718 3995497C EA956AE5 15D22618 98FA0510'
    '15728E5A 8AACAA68 FFFFFFFF FFFFFFFF')

PRESETS = {
    'tiny': (23, 11, 4),
    'medium': (2039, 1019, 4),
    # p = 7 mod 8 for the MODP primes, so 2 is a quadratic residue of order q
    'modp768': (_MODP768, (_MODP768 - 1) // 2, 2),
    'modp1024': (_MODP1024, (_MODP1024 - 1) // 2, 2),
    'modp2048': (_MODP2048, (_MODP2048 - 1) // 2, 2),
}
"""dict: named safe-prime groups as (p, q, g)"""


def is_probable_prime(n, rounds=MR_ROUNDS):
    if n < 2:
        return False
    return bool(gmpy2.is_prime(n, rounds))


## Class definitions ##


class GroupParams(object):
    """The algebraic arena: modulus p, prime subgroup order q, generator g.

    Instances are immutable and validated on construction unless
    `validate=False` is passed by code that already trusts the values.
    """

    def __init__(self, p, q, g, name=None, validate=True):
        self._p = int(p)
        self._q = int(q)
        self._g = int(g)
        self.name = name or 'custom'

        if validate:
            self.validate()

    @property
    def p(self):
        return self._p

    @property
    def q(self):
        return self._q

    @property
    def g(self):
        return self._g

    @property
    def generator(self):
        return Element(self._g, self)

    @property
    def identity(self):
        return Element(1, self)

    @property
    def byte_length(self):
        return (self._p.bit_length() + 7) // 8

    def validate(self):
        """Check every group invariant, raising ParameterError on failure"""

        p, q, g = self._p, self._q, self._g
        if not is_probable_prime(p):
            raise ParameterError("p = %i is not prime" % p)
        if not is_probable_prime(q):
            raise ParameterError("q = %i is not prime" % q)
        if (p - 1) % q:
            raise ParameterError("q does not divide p - 1")
        if not 1 < g < p:
            raise ParameterError("g must lie in [2, p-1]")
        if pow(g, q, p) != 1:
            raise ParameterError("g does not have order q")

    def contains(self, value):
        """True if the integer `value` is in the order-q subgroup"""

        return 1 <= value < self._p and \
            gmpy2.powmod(value, self._q, self._p) == 1

    def element(self, value):
        """Build an Element from an untrusted integer, checking membership"""

        value = int(value)
        if not self.contains(value):
            if self._p.bit_length() <= 64:
                raise MembershipError("%i is not in the order-%i subgroup "
                                      "mod %i" % (value, self._q, self._p))
            raise MembershipError("residue is not in the order-q subgroup "
                                  "of group %s" % self.name)
        return Element(value, self)

    def __eq__(self, other):
        if not isinstance(other, GroupParams):
            return NotImplemented
        return (self._p, self._q, self._g) == (other._p, other._q, other._g)

    def __hash__(self):
        return hash((self._p, self._q, self._g))

    def __repr__(self):
        return "<GroupParams %s: %i-bit p>" % (self.name, self._p.bit_length())


class Element(object):
    """A member of the order-q subgroup mod p.

    Construct through GroupParams.element() or decode_element(); the
    constructor itself trusts its caller.
    """

    __slots__ = ('_value', '_group')

    def __init__(self, value, group):
        self._value = value
        self._group = group

    @property
    def value(self):
        return self._value

    @property
    def group(self):
        return self._group

    def __mul__(self, other):
        return mul(self, other)

    def __pow__(self, e):
        return exp(self, e)

    def inverse(self):
        return invert(self)

    def __bytes__(self):
        return encode_element(self)

    def __int__(self):
        return self._value

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self._value == other._value and self._group.p == other._group.p

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        return hash((self._value, self._group.p))

    def __str__(self):
        return str(self._value)

    def __repr__(self):
        if self._value.bit_length() <= 64:
            return "<Element %i mod %i>" % (self._value, self._group.p)
        return "<Element %s... (%s)>" % (hex(self._value)[:12], self._group.name)


class Scalar(object):
    """An exponent, always reduced modulo the group order q"""

    __slots__ = ('_value', '_group')

    def __init__(self, value, group):
        self._value = int(value) % group.q
        self._group = group

    @property
    def value(self):
        return self._value

    @property
    def group(self):
        return self._group

    def _coerce(self, other):
        if isinstance(other, Scalar):
            return other._value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(self._value + o, self._group)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(self._value - o, self._group)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(o - self._value, self._group)

    def __neg__(self):
        return scalar_neg(self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(self._value * o, self._group)

    __rmul__ = __mul__

    def inverse(self):
        return scalar_invert(self)

    def __bool__(self):
        return self._value != 0

    def __int__(self):
        return self._value

    def __index__(self):
        return self._value

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return (self._value == other._value
                    and self._group.q == other._group.q)
        if isinstance(other, int):
            return self._value == other % self._group.q
        return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        return hash((self._value, self._group.q))

    def __repr__(self):
        if self._value.bit_length() <= 64:
            return "<Scalar %i>" % self._value
        return "<Scalar %s...>" % hex(self._value)[:12]


## Group operations ##


@functools.lru_cache(maxsize=None)
def _load_preset(name):
    p, q, g = PRESETS[name]
    log.debug("validating preset group %s", name)
    return GroupParams(p, q, g, name=name)


def load_group(preset=None, p=None, q=None, g=None):
    """Load a named preset or a custom (p, q, g) and validate it.

    Args:
        preset (str): one of PRESETS
        p, q, g (int or str): custom values, decimal or 0x-hex

    Returns:
        GroupParams

    Raises:
        ParameterError: unknown preset, both or neither source given, or any
            group invariant violated
    """

    custom = [v for v in (p, q, g) if v is not None]
    if preset is not None and custom:
        raise ParameterError("give either a preset or custom p, q, g, not both")

    if preset is not None:
        if preset not in PRESETS:
            raise ParameterError("unknown group preset %r (known: %s)"
                                 % (preset, ', '.join(sorted(PRESETS))))
        return _load_preset(preset)

    if len(custom) != 3:
        raise ParameterError("custom groups need all of p, q and g")

    try:
        p, q, g = parse_int(p), parse_int(q), parse_int(g)
    except ValueError as e:
        raise ParameterError("unparseable group value: %s" % e)
    return GroupParams(p, q, g)


def exp(base, e):
    """base^e mod p. `e` is a Scalar or an int, reduced mod q."""

    group = base.group
    return Element(int(gmpy2.powmod(base.value, int(e) % group.q, group.p)),
                   group)


def mul(a, b):
    group = a.group
    return Element(a.value * b.value % group.p, group)


def invert(a):
    group = a.group
    return Element(int(gmpy2.invert(a.value, group.p)), group)


def scalar_add(a, b):
    return Scalar(a.value + b.value, a.group)


def scalar_neg(a):
    return Scalar(-a.value, a.group)


def scalar_mul(a, b):
    return Scalar(a.value * b.value, a.group)


def scalar_invert(a):
    if not a.value:
        raise NonInvertibleError("0 has no inverse mod q")
    return Scalar(int(gmpy2.invert(a.value, a.group.q)), a.group)


def sample_scalar(rng, group):
    """Draw a scalar uniformly from [1, q-1]"""

    return Scalar(rng.randint(1, group.q - 1), group)


## Encoding ##


def encode_element(a):
    """Canonical bytes: 4-byte big-endian length, then the minimal
    big-endian magnitude.
    """

    n = (a.value.bit_length() + 7) // 8
    return n.to_bytes(LENGTH_PREFIX, 'big') + a.value.to_bytes(n, 'big')


def decode_element(data, group):
    """Inverse of encode_element, validating canonical form and subgroup
    membership.

    Raises:
        MembershipError: malformed encoding or residue outside the subgroup
    """

    if not isinstance(data, (bytes, bytearray)):
        raise MembershipError("`data` must be bytes")
    if len(data) <= LENGTH_PREFIX:
        raise MembershipError("encoding too short")

    n = int.from_bytes(data[:LENGTH_PREFIX], 'big')
    body = bytes(data[LENGTH_PREFIX:])
    if n != len(body):
        raise MembershipError("length prefix says %i bytes, got %i"
                              % (n, len(body)))
    if body[0] == 0:
        raise MembershipError("non-minimal encoding")

    return group.element(int.from_bytes(body, 'big'))
