"""Core opengke module: member and controller state machines.

Two initial key agreements (P1, P2), single-broadcast rekeying (P3), rekeying
with eviction (P3 with erased slots) and mass join (P4). Every keying message
satisfies the slot identity

    Y[i] * S^x_i * R^r_i == K

for every roster member i holding the effective pair (r_i, x_i). Messages of a
P2 chain carry no S and use R in its place.
"""


import logging
import types

from .errors import (DegenerateJoinError, DegenerateKeyError,
                     EmptyRosterError, IncompleteRosterError,
                     InconsistencyError, InvalidEvictionError,
                     MembershipError, NoSlotError, NotAMemberError,
                     ParameterError, RosterConflictError,
                     VariantMismatchError)
from .groups import Scalar, exp, sample_scalar
from .utils import fingerprint, prod


log = logging.getLogger(__name__)


P1, P2, P3, P4 = 'P1', 'P2', 'P3', 'P4'
VARIANTS = (P1, P2, P3, P4)

MEMBER = 'member'
CONTROLLER = 'controller'


## Class definitions ##


class KeyPair(object):
    """The two private scalars (r, x) of a member and their public keys.

    Zero scalars are only accepted with `degenerate=True`, which exists to
    reproduce plain two-party Diffie-Hellman (all x set to zero).
    """

    def __init__(self, group, r, x, degenerate=False):
        self._group = group
        self._r = Scalar(r, group)
        self._x = Scalar(x, group)
        if not degenerate and not (self._r and self._x):
            raise ParameterError("zero private scalar outside degenerate mode")
        self.degenerate = degenerate
        self._pub_r = exp(group.generator, self._r)
        self._pub_x = exp(group.generator, self._x)

    @classmethod
    def generate(cls, group, rng):
        r = sample_scalar(rng, group)
        x = sample_scalar(rng, group)
        return cls(group, r, x)

    @property
    def group(self):
        return self._group

    @property
    def r(self):
        return self._r

    @property
    def x(self):
        return self._x

    @property
    def pub_r(self):
        return self._pub_r

    @property
    def pub_x(self):
        return self._pub_x

    def __eq__(self, other):
        if not isinstance(other, KeyPair):
            return NotImplemented
        return (self._r, self._x) == (other._r, other._x)

    def __hash__(self):
        return hash((self._r, self._x))

    def __repr__(self):
        # private halves stay out of reprs and logs
        return "<KeyPair pub_r=%s pub_x=%s>" % (fingerprint(self._pub_r),
                                                fingerprint(self._pub_x))


class MemberState(object):
    """One simulated participant.

    `pair` is the member's current effective pair. A member acting as
    controller replaces it with the fresh pair it sampled for that epoch.
    `key` is None until the first keying message has been processed.
    """

    def __init__(self, member_id, pair, epoch=0, key=None, role=MEMBER):
        if member_id < 0:
            raise ParameterError("member ids are non-negative integers")
        self.id = int(member_id)
        self.pair = pair
        self.epoch = epoch
        self.key = key
        self.role = role

    @property
    def group(self):
        return self.pair.group

    def rotate(self, fresh, key, epoch):
        """Take up the fresh pair after acting as controller"""

        self.pair = fresh
        self.key = key
        self.epoch = epoch
        self.role = CONTROLLER

    def __repr__(self):
        temp = "<MemberState %i %s epoch %i key %s>"
        key = fingerprint(self.key) if self.key is not None else None
        return temp % (self.id, self.role, self.epoch, key)


class KeyingMessage(object):
    """The broadcast {Y_1 .. Y_n, R, S} of one epoch.

    Args:
        epoch (int): t >= 1
        variant (str): protocol that produced the message, one of VARIANTS
        controller (int): id of the broadcasting member
        slots (dict): member id -> Element
        R (Element): public value R_t
        S (Element): public value S_t, None for P2 chains
    """

    def __init__(self, epoch, variant, controller, slots, R, S=None):
        if variant not in VARIANTS:
            raise ParameterError("unknown variant %r" % variant)
        if epoch < 1:
            raise ParameterError("keying messages start at epoch 1")
        if not slots:
            raise EmptyRosterError("a keying message needs at least one slot")
        if controller not in slots:
            raise NotAMemberError("controller %i has no slot" % controller)
        if variant == P1 and S is None:
            raise VariantMismatchError("P1 messages carry S")
        if variant == P2 and S is not None:
            raise VariantMismatchError("P2 messages carry no S")

        self._epoch = epoch
        self._variant = variant
        self._controller = controller
        self._slots = types.MappingProxyType(dict(sorted(slots.items())))
        self._R = R
        self._S = S

    @property
    def epoch(self):
        return self._epoch

    @property
    def variant(self):
        return self._variant

    @property
    def controller(self):
        return self._controller

    @property
    def slots(self):
        return self._slots

    @property
    def R(self):
        return self._R

    @property
    def S(self):
        return self._S

    @property
    def roster(self):
        return list(self._slots)

    @property
    def has_s(self):
        return self._S is not None

    @property
    def second(self):
        """The value x-scalars are applied to: S, or R in a P2 chain"""
        return self._S if self._S is not None else self._R

    @property
    def group(self):
        return self._R.group

    def __len__(self):
        return len(self._slots)

    def __eq__(self, other):
        if not isinstance(other, KeyingMessage):
            return NotImplemented
        return (self._epoch, self._variant, self._controller,
                dict(self._slots), self._R, self._S) == \
               (other._epoch, other._variant, other._controller,
                dict(other._slots), other._R, other._S)

    def __repr__(self):
        temp = "<KeyingMessage %s epoch %i controller %i roster %s>"
        return temp % (self._variant, self._epoch, self._controller,
                       self.roster)


class JoinPetition(object):
    """A joiner's blinded pair (R_t^r, S_t^x) sent to the collecting member"""

    def __init__(self, joiner, blinded_r, blinded_x, check=True):
        for v in (blinded_r, blinded_x):
            if check and not v.group.contains(v.value):
                raise MembershipError("petition value outside the subgroup")
        self.joiner = int(joiner)
        self.blinded_r = blinded_r
        self.blinded_x = blinded_x

    def __eq__(self, other):
        if not isinstance(other, JoinPetition):
            return NotImplemented
        return (self.joiner, self.blinded_r, self.blinded_x) == \
               (other.joiner, other.blinded_r, other.blinded_x)

    def __repr__(self):
        return "<JoinPetition from %i>" % self.joiner


## Useful functions ##


def new_member(group, member_id, rng=None, r=None, x=None, degenerate=False):
    """Create a MemberState with pinned scalars, or draw them from `rng`"""

    if r is None:
        r = sample_scalar(rng, group)
    if x is None:
        x = sample_scalar(rng, group)
    return MemberState(member_id, KeyPair(group, r, x, degenerate=degenerate))


def recovery_formula(slot, msg, pair):
    """slot * second^x * R^r for an arbitrary slot and pair"""

    return slot * exp(msg.second, pair.x) * exp(msg.R, pair.r)


def derive_key(msg, member_id, pair):
    """Apply the recovery formula to `member_id`'s slot of `msg`"""

    if member_id not in msg.slots:
        raise NoSlotError("member %i has no slot in epoch %i"
                          % (member_id, msg.epoch))
    return recovery_formula(msg.slots[member_id], msg, pair)


def slot_identity_holds(msg, member_id, pair, key):
    return derive_key(msg, member_id, pair) == key


def _pub_r(value):
    # published entries are either g^r or the (g^r, g^x) tuple of publish_keys
    return value[0] if isinstance(value, tuple) else value


def _pub_x(value):
    return value[1] if isinstance(value, tuple) else None


def _roster(controller, *maps):
    ids = {controller}
    for m in maps:
        ids.update(m)
    return sorted(ids)


def _require(source, ids, what):
    missing = [i for i in ids if i not in source or source[i] is None]
    if missing:
        raise IncompleteRosterError("missing %s for member(s) %s"
                                    % (what, ', '.join(map(str, missing))))


def _check_controller(controller):
    if not controller.pair.r:
        raise DegenerateKeyError("controller %i holds r = 0" % controller.id)


def _fresh_pair(group, rng, fresh):
    if fresh is not None:
        return fresh
    return KeyPair.generate(group, rng)


## Initial key agreement ##


def publish_keys(member, variant=P1):
    """First round: (g^r, g^x), or (g^r, None) when running P2"""

    if variant == P2:
        return member.pair.pub_r, None
    return member.pair.pub_r, member.pair.pub_x


def partial_product(member, published, controller, roster=None):
    """Second round of P1: product of g^r_j over j not in {controller, i}.

    Args:
        member (MemberState): the sending member
        published (dict): member id -> g^r_j, or the tuples of publish_keys
        controller (int): controller id
        roster (seq:int): full roster, defaults to the ids in `published`

    Raises:
        IncompleteRosterError: a needed public key is missing
    """

    if roster is None:
        roster = _roster(controller, published, [member.id])
    needed = [j for j in roster if j not in (controller, member.id)]
    _require(published, needed, "public key")

    return prod((_pub_r(published[j]) for j in needed), member.group.identity)


def ika1_build_keying(controller, published, partials, rng, fresh=None):
    """Controller side of P1: compute K_1 and the keying broadcast.

    Partials are checked against the published keys and the controller takes
    up a fresh pair (drawn from `rng` unless `fresh` pins it).

    Returns:
        (KeyingMessage, Element): the broadcast and K_1
    """

    group = controller.group
    g = group.generator
    c = controller.id
    _check_controller(controller)

    roster = _roster(c, published, partials)
    others = [i for i in roster if i != c]
    if not others:
        raise IncompleteRosterError("a group needs at least two members")
    _require({i: _pub_x(published.get(i)) for i in others}, others,
             "public key pair")
    _require(partials, others, "partial")

    pubs_r = {i: _pub_r(published[i]) for i in others}
    for i in others:
        expected = prod((pubs_r[j] for j in others if j != i), group.identity)
        if partials[i] != expected:
            raise InconsistencyError("partial from member %i does not match "
                                     "the published keys" % i)

    r_c, x_c = controller.pair.r, controller.pair.x
    key = exp(prod(pubs_r.values(), group.identity), r_c)
    fresh = _fresh_pair(group, rng, fresh)

    slots = {}
    for i in others:
        slots[i] = exp(_pub_x(published[i]), -x_c) * exp(partials[i], r_c)
    slots[c] = key * exp(g, -(fresh.r * r_c + fresh.x * x_c))

    msg = KeyingMessage(1, P1, c, slots, exp(g, r_c), exp(g, x_c))
    controller.rotate(fresh, key, msg.epoch)
    log.debug("P1 keying built by %i for %i members, key %s",
              c, len(roster), fingerprint(key))
    return msg, key


def recover_key(member, msg):
    """K = Y_i * S^x_i * R^r_i with the member's current effective pair.

    Raises:
        VariantMismatchError: the message belongs to a P2 chain
        NoSlotError: the member has no slot (evicted or never joined)
    """

    if not msg.has_s:
        raise VariantMismatchError("message has no S; use ika2_recover")
    return _recover(member, msg)


def ika2_blinded_partial(member, published, controller, roster=None):
    """Second round of P2: the P1 partial blinded by g^-x_i"""

    partial = partial_product(member, published, controller, roster)
    return partial * exp(member.group.generator, -member.pair.x)


def ika2_build_keying(controller, published, blinded, rng, fresh=None):
    """Controller side of P2. The message carries no S.

    Args:
        published (dict): member id -> g^r_j (needed for K_1)
        blinded (dict): member id -> blinded partial

    Returns:
        (KeyingMessage, Element)
    """

    group = controller.group
    g = group.generator
    c = controller.id
    _check_controller(controller)

    roster = _roster(c, published, blinded)
    others = [i for i in roster if i != c]
    if not others:
        raise IncompleteRosterError("a group needs at least two members")
    _require(published, others, "public key")
    _require(blinded, others, "blinded partial")

    r_c = controller.pair.r
    key = exp(prod((_pub_r(published[i]) for i in others), group.identity),
              r_c)
    fresh = _fresh_pair(group, rng, fresh)

    slots = {i: exp(blinded[i], r_c) for i in others}
    slots[c] = key * exp(g, -((fresh.r + fresh.x) * r_c))

    msg = KeyingMessage(1, P2, c, slots, exp(g, r_c))
    controller.rotate(fresh, key, msg.epoch)
    log.debug("P2 keying built by %i for %i members, key %s",
              c, len(roster), fingerprint(key))
    return msg, key


def ika2_recover(member, msg):
    """K = Y_i * R^x_i * R^r_i"""

    if msg.has_s:
        raise VariantMismatchError("message carries S; use recover_key")
    return _recover(member, msg)


def recover(member, msg):
    """Recover with whichever formula the message's chain shape needs"""

    return _recover(member, msg)


def _recover(member, msg):
    key = derive_key(msg, member.id, member.pair)
    member.key = key
    member.epoch = msg.epoch
    member.role = CONTROLLER if msg.controller == member.id else MEMBER
    log.debug("member %i recovered epoch %i key %s",
              member.id, msg.epoch, fingerprint(key))
    return key


## Auxiliary key agreement and membership changes ##


def _check_acting(controller, prev, prev_key):
    if controller.id not in prev.slots:
        raise NotAMemberError("member %i is not in the epoch %i roster"
                              % (controller.id, prev.epoch))
    if derive_key(prev, controller.id, controller.pair) != prev_key:
        raise InconsistencyError("member %i does not hold the epoch %i key"
                                 % (controller.id, prev.epoch))


def _controller_slot(key, prev, fresh):
    # K * R_prev^(-r'r') * second_prev^(-r'x')
    r1, x1 = fresh.r, fresh.x
    return key * exp(prev.R, -(r1 * r1)) * exp(prev.second, -(r1 * x1))


def _advance(prev, variant, controller, slots, fresh):
    r1 = fresh.r
    S = exp(prev.S, r1) if prev.has_s else None
    return KeyingMessage(prev.epoch + 1, variant, controller, slots,
                         exp(prev.R, r1), S)


def aka_rekey(new_controller, prev, prev_key, rng, fresh=None):
    """P3: refresh the key with one broadcast.

    K_t = K_{t-1}^r', every other slot is raised to r', the controller's slot
    is rebuilt for its fresh pair (r', x').

    Returns:
        (KeyingMessage, Element)
    """

    return rekey_evict(new_controller, prev, prev_key, (), rng, fresh)


def rekey_evict(new_controller, prev, prev_key, leavers, rng, fresh=None):
    """P3 with the leavers' slots erased.

    Raises:
        NotAMemberError: controller or a leaver is not in the roster
        EmptyRosterError: every member is leaving
        InvalidEvictionError: the acting controller is among the leavers
    """

    c = new_controller.id
    leavers = set(leavers)
    roster = set(prev.roster)

    unknown = leavers - roster
    if unknown:
        raise NotAMemberError("cannot evict non-members %s"
                              % ', '.join(map(str, sorted(unknown))))
    if roster <= leavers:
        raise EmptyRosterError("evicting every member leaves no group")
    if c in leavers:
        raise InvalidEvictionError("member %i cannot evict itself while "
                                   "acting as controller" % c)
    _check_acting(new_controller, prev, prev_key)

    fresh = _fresh_pair(new_controller.group, rng, fresh)
    key = exp(prev_key, fresh.r)

    slots = {i: exp(y, fresh.r) for i, y in prev.slots.items()
             if i != c and i not in leavers}
    slots[c] = _controller_slot(key, prev, fresh)

    msg = _advance(prev, P3, c, slots, fresh)
    new_controller.rotate(fresh, key, msg.epoch)
    if leavers:
        log.debug("epoch %i: member %i evicted %s", msg.epoch, c,
                  sorted(leavers))
    log.debug("rekey to epoch %i by %i, key %s", msg.epoch, c,
              fingerprint(key))
    return msg, key


def join_petition(joiner, R_t, S_t=None):
    """P4 step 1: (R_t^r, S_t^x). In a P2 chain pass S_t=None; x blinds R_t.

    Raises:
        MembershipError: R_t or S_t is outside the subgroup
    """

    for v in (R_t, S_t):
        if v is not None and not v.group.contains(v.value):
            raise MembershipError("public value outside the subgroup")
    second = S_t if S_t is not None else R_t
    return JoinPetition(joiner.id, exp(R_t, joiner.pair.r),
                        exp(second, joiner.pair.x))


def join_rekey(collector, prev, prev_key, petitions, rng, fresh=None):
    """P4: admit every petitioner with one broadcast.

    With B the product of the petitions' blinded r-values,
    K_{t+1} = (K_t * B)^r' and existing slots become (Y * B)^r'.

    Raises:
        DegenerateJoinError: no petitions
        RosterConflictError: a joiner id is repeated or already a member
        NotAMemberError: the collector is not in the roster
    """

    if not petitions:
        raise DegenerateJoinError("a join needs at least one petition")

    c = collector.id
    seen = set(prev.roster)
    for p in petitions:
        if p.joiner in seen:
            raise RosterConflictError("member id %i already taken" % p.joiner)
        seen.add(p.joiner)
    _check_acting(collector, prev, prev_key)

    group = collector.group
    fresh = _fresh_pair(group, rng, fresh)
    r1 = fresh.r

    blind = prod((p.blinded_r for p in petitions), group.identity)
    key = exp(prev_key * blind, r1)

    slots = {i: exp(y * blind, r1) for i, y in prev.slots.items() if i != c}
    slots[c] = _controller_slot(key, prev, fresh)
    for p in petitions:
        slots[p.joiner] = key * exp(p.blinded_r * p.blinded_x, -r1)

    msg = _advance(prev, P4, c, slots, fresh)
    collector.rotate(fresh, key, msg.epoch)
    log.debug("epoch %i: member %i admitted %s, key %s", msg.epoch, c,
              [p.joiner for p in petitions], fingerprint(key))
    return msg, key
