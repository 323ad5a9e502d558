"""Passive adversary: the product attack on single-key group keying.

With one private scalar k per member, the controller j would send
D_i = g^(k_j * sum_{r != i, j} k_r), and the product of all D_i is K^(n-2).
Anyone who knows q inverts n - 2 and recovers K. The two-scalar protocols
blind every slot with an independent second key, so the same computation
yields garbage; attack_real_protocol demonstrates that.
"""


import json
import logging

from .errors import AttackInapplicableError, DegenerateError, WireError
from .groups import exp, sample_scalar
from .protocols.wire import dumps, element_from_hex, message_from_dict
from .utils import fingerprint, prod


log = logging.getLogger(__name__)


VIEW_FIELDS = ('seq', 'epoch', 'direction', 'sender', 'receiver', 'kind',
               'payload')
"""tuple: record fields a passive observer sees"""

PAYLOAD_FIELDS = ('group', 'pub_r', 'pub_x', 'partial', 'joiner',
                  'blinded_r', 'blinded_x', 'epoch', 'variant', 'controller',
                  'roster', 'slots', 'R', 'S')
"""tuple: payload fields that may travel on the wire"""

OBSERVED_DIRECTIONS = ('meta', 'publish', 'unicast', 'broadcast')


class SingleKeyBroadcast(object):
    """The messages D_i a single-key controller would send"""

    def __init__(self, controller, messages, n):
        if len(messages) != n - 1 or controller in messages:
            raise DegenerateError("expected one message per non-controller")
        self.controller = controller
        self.messages = dict(sorted(messages.items()))
        self.n = n

    def __repr__(self):
        return "<SingleKeyBroadcast controller %i n %i>" % (self.controller,
                                                             self.n)


def single_key_ika(scalars, controller):
    """Run the flawed one-key-per-member agreement.

    Args:
        scalars (dict): member id -> Scalar k_i
        controller (int): id j of the controller

    Returns:
        (SingleKeyBroadcast, Element): the broadcast and the true key K
    """

    n = len(scalars)
    if n < 3:
        raise DegenerateError("the single-key variant needs n >= 3")
    if controller not in scalars:
        raise DegenerateError("controller %i holds no scalar" % controller)

    k_j = scalars[controller]
    g = k_j.group.generator
    total = sum((k for i, k in scalars.items() if i != controller),
                0 * k_j)

    key = exp(g, k_j * total)
    messages = {i: exp(g, k_j * (total - k)) for i, k in scalars.items()
                if i != controller}
    return SingleKeyBroadcast(controller, messages, n), key


def _invert_exponent(n, q):
    e = (n - 2) % q
    if n < 3 or not e:
        raise AttackInapplicableError("n - 2 = %i is not invertible mod q"
                                      % (n - 2))
    return pow(e, -1, q)


def product_attack(b, q=None):
    """Recover K from the product of the D_i.

    Raises:
        AttackInapplicableError: n - 2 = 0 mod q
    """

    group = next(iter(b.messages.values())).group
    q = q or group.q
    e = _invert_exponent(b.n, q)
    return exp(prod(b.messages.values(), group.identity), e)


def attack_real_protocol(msg, q=None):
    """The same computation applied to the non-controller Y slots.

    Returns the candidate key; callers compare it with the true key.
    """

    q = q or msg.group.q
    e = _invert_exponent(len(msg), q)
    slots = [y for i, y in msg.slots.items() if i != msg.controller]
    candidate = exp(prod(slots, msg.group.identity), e)
    log.debug("product attack on epoch %i gave candidate %s",
              msg.epoch, fingerprint(candidate))
    return candidate


## Adversary view ##


class AdversaryView(object):
    """What a passive observer of a run saw, in order"""

    def __init__(self, records):
        self.records = list(records)

    def to_jsonl(self):
        return ''.join(dumps(r) + '\n' for r in self.records)

    @classmethod
    def from_jsonl(cls, text):
        return cls(json.loads(line) for line in text.splitlines() if line)

    def broadcasts(self):
        return [r for r in self.records if r['direction'] == 'broadcast']

    def __eq__(self, other):
        if not isinstance(other, AdversaryView):
            return NotImplemented
        return self.records == other.records

    def __len__(self):
        return len(self.records)


def _filter_payload(payload):
    return {k: v for k, v in payload.items() if k in PAYLOAD_FIELDS}


def capture_view(transcript):
    """Strip a transcript down to the passive adversary's view.

    Keeps published keys, partials, petitions and broadcasts. Oracle sections
    and anything outside the declared wire fields are dropped.
    """

    view = []
    for rec in transcript.records:
        if rec['direction'] not in OBSERVED_DIRECTIONS:
            continue
        r = {k: rec[k] for k in VIEW_FIELDS if k in rec}
        r['payload'] = _filter_payload(rec.get('payload') or {})
        view.append(r)
    return AdversaryView(view)


def scan_view(view):
    """Return the paths of any fields outside the declared filter"""

    bad = []
    for i, rec in enumerate(view.records):
        for k in rec:
            if k not in VIEW_FIELDS:
                bad.append('%i.%s' % (i, k))
        for k in rec.get('payload', {}):
            if k not in PAYLOAD_FIELDS:
                bad.append('%i.payload.%s' % (i, k))
    return bad


## Reports ##


def single_key_report(n, group, rng, controller=1):
    """Synthesize a single-key instance with `n` members and attack it"""

    scalars = {i: sample_scalar(rng, group) for i in range(1, n + 1)}
    b, key = single_key_ika(scalars, controller)
    recovered = product_attack(b)
    return {
        'variant': 'single-key',
        'n': n,
        'applicable': True,
        'recovered': fingerprint(recovered),
        'matches_true_key': recovered == key,
    }


def attack_report(transcript, group):
    """Run the product attack on a transcript's initial keying broadcast.

    Returns:
        dict: variant, n, applicable, recovered (candidate fingerprint or
            None) and matches_true_key (None when the transcript carries
            no oracle sections)
    """

    first = None
    for rec in transcript.records:
        if rec['direction'] == 'broadcast' and rec['kind'] == 'keying':
            first = rec
            break
    if first is None:
        raise WireError("transcript holds no keying broadcast")

    msg = message_from_dict(first['payload'], group)
    report = {
        'variant': msg.variant,
        'n': len(msg),
        'applicable': True,
        'recovered': None,
        'matches_true_key': False,
    }
    try:
        candidate = attack_real_protocol(msg)
    except AttackInapplicableError:
        log.warning("product attack inapplicable for n = %i", len(msg))
        report['applicable'] = False
        return report

    report['recovered'] = fingerprint(candidate)
    oracle = first.get('oracle')
    if not oracle or 'key' not in oracle:
        # passive view: nothing to compare the candidate against
        report['matches_true_key'] = None
        return report
    true_key = element_from_hex(oracle['key'], group)
    report['matches_true_key'] = candidate == true_key
    return report
