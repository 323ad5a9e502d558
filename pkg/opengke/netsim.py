"""Deterministic multi-party simulator.

A scenario is a list of events (ika, rekey, evict, join, attack_demo) run
against simulated members that talk only through the message bus. Every
message is recorded in a Transcript. Records that carry private material
(seed, scalars, derived keys) keep it under an "oracle" key; dropping that
key leaves what a passive observer saw.

After each epoch an omniscient oracle recomputes the key from the raw
scalars and checks every member against it.
"""


import json
import logging
import os

from tabulate import tabulate

from . import core
from .adversary import attack_real_protocol
from .core import (KeyPair, MemberState, P1, P2, derive_key, recover,
                   recovery_formula)
from .errors import (AttackInapplicableError, GKEError, InvariantViolation,
                     NotAMemberError, RosterConflictError, ScenarioError,
                     TranscriptParseError, WireError)
from .groups import Scalar, exp
from .protocols.bus import (ALL, BROADCAST, PUBLISH, UNICAST, Bus, Envelope,
                            deliver_round)
from .protocols.wire import (dumps, element_from_hex, element_to_hex,
                             keys_from_dict, keys_to_dict, message_from_dict,
                             message_to_dict, partial_from_dict,
                             partial_to_dict, petition_from_dict,
                             petition_to_dict)
from .utils import DEFAULT_SEED, RNG, fingerprint, parse_int


log = logging.getLogger(__name__)


KINDS = ('ika', 'rekey', 'evict', 'join', 'attack_demo')

META = 'meta'
LOCAL = 'local'


## Scenario scripts ##


def _int(d, name, index, required=True):
    v = d.get(name)
    if v is None and not required:
        return None
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ScenarioError("%r must be a non-negative integer" % name, index)
    return v


def _scalars(d, index, where):
    """Pinned (r, x) of a member or fresh-pair spec, or None if unpinned"""

    if d is None:
        return None
    if not isinstance(d, dict):
        raise ScenarioError("%s must be an object" % where, index)
    try:
        r = parse_int(d['r']) if d.get('r') is not None else None
        x = parse_int(d['x']) if d.get('x') is not None else None
    except (TypeError, ValueError):
        raise ScenarioError("%s scalars must be decimal strings" % where,
                            index)
    if (r is None) != (x is None):
        raise ScenarioError("%s must pin both r and x or neither" % where,
                            index)
    return None if r is None else (r, x)


def _member_specs(v, index, where):
    if isinstance(v, int) and not isinstance(v, bool):
        if v < 1:
            raise ScenarioError("%s needs at least one member" % where, index)
        return [{'id': i} for i in range(1, v + 1)]
    if not isinstance(v, list) or not v:
        raise ScenarioError("%s must be a count or a non-empty list" % where,
                            index)
    specs = []
    for m in v:
        if not isinstance(m, dict):
            raise ScenarioError("%s entries must be objects" % where, index)
        spec = {'id': _int(m, 'id', index)}
        pinned = _scalars(m, index, 'member %i' % spec['id'])
        if pinned is not None:
            spec['r'], spec['x'] = str(pinned[0]), str(pinned[1])
        specs.append(spec)
    ids = [s['id'] for s in specs]
    if len(set(ids)) != len(ids):
        raise ScenarioError("duplicate member ids in %s" % where, index)
    return specs


def _fresh_spec(d, index):
    pinned = _scalars(d.get('fresh'), index, 'fresh pair')
    if pinned is None:
        return None
    return {'r': str(pinned[0]), 'x': str(pinned[1])}


class ScenarioEvent(object):
    """One scripted step.

    Attributes:
        kind (str): one of KINDS
        params (dict): normalized parameters for that kind
    """

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params

    @classmethod
    def from_dict(cls, d, index=None):
        if not isinstance(d, dict):
            raise ScenarioError("events are JSON objects", index)
        kind = d.get('kind')
        if kind not in KINDS:
            raise ScenarioError("unknown event kind %r" % kind, index)

        p = {}
        if kind == 'ika':
            p['variant'] = d.get('variant', P1)
            if p['variant'] not in (P1, P2):
                raise ScenarioError("ika variant must be P1 or P2", index)
            p['controller'] = _int(d, 'controller', index)
            p['members'] = _member_specs(d.get('members'), index, 'members')
            if len(p['members']) < 2:
                raise ScenarioError("an ika needs at least two members",
                                    index)
            if p['controller'] not in [m['id'] for m in p['members']]:
                raise ScenarioError("controller is not among the members",
                                    index)
            p['degenerate'] = bool(d.get('degenerate', False))
            p['fresh'] = _fresh_spec(d, index)
        elif kind in ('rekey', 'evict'):
            p['controller'] = _int(d, 'controller', index)
            p['fresh'] = _fresh_spec(d, index)
            if kind == 'evict':
                leavers = d.get('leavers')
                if not isinstance(leavers, list) or not leavers:
                    raise ScenarioError("evict needs a non-empty leavers list",
                                        index)
                p['leavers'] = sorted(_int({'id': i}, 'id', index)
                                      for i in leavers)
        elif kind == 'join':
            rounds = d.get('rounds')
            if rounds is None:
                rounds = [{k: d.get(k) for k in ('collector', 'joiners',
                                                 'fresh')}]
            if not isinstance(rounds, list) or not rounds:
                raise ScenarioError("join rounds must be a non-empty list",
                                    index)
            p['rounds'] = []
            for r in rounds:
                if not isinstance(r, dict):
                    raise ScenarioError("join rounds are objects", index)
                p['rounds'].append({
                    'collector': _int(r, 'collector', index),
                    'joiners': _member_specs(r.get('joiners'), index,
                                             'joiners'),
                    'fresh': _fresh_spec(r, index),
                })
        return cls(kind, **p)

    def to_dict(self):
        d = {'kind': self.kind}
        for k, v in self.params.items():
            if v is not None:
                d[k] = v
        return d

    def __eq__(self, other):
        if not isinstance(other, ScenarioEvent):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return "<ScenarioEvent %s>" % self.kind


def parse_scenario(data):
    """Validate a script given as a list of dicts (or ScenarioEvents).

    Raises:
        ScenarioError: naming the offending event
    """

    if not isinstance(data, list) or not data:
        raise ScenarioError("a scenario is a non-empty JSON array")

    events = []
    for i, d in enumerate(data):
        ev = d if isinstance(d, ScenarioEvent) else \
            ScenarioEvent.from_dict(d, i)
        if i == 0 and ev.kind != 'ika':
            raise ScenarioError("the first event must be an ika", i)
        if i > 0 and ev.kind == 'ika':
            raise ScenarioError("only the first event may be an ika", i)
        events.append(ev)
    return events


def load_scenario(path):
    if not os.path.isfile(path):
        raise ScenarioError("scenario not found: %s" % path)
    with open(path, 'r') as f:
        try:
            data = json.load(f)
        except ValueError as e:
            raise ScenarioError("scenario is not valid JSON: %s" % e)
    return parse_scenario(data)


def random_script(rng, n, length, variant=P1, max_members=12):
    """Build a random well-formed script of `length` events for tests.

    Members are numbered 1..n; joiners take the next unused ids. Rosters
    never exceed `max_members` and never drop below two.
    """

    roster = list(range(1, n + 1))
    next_id = n + 1
    script = [{'kind': 'ika', 'variant': variant,
               'controller': rng.choice(roster), 'members': n}]

    for _ in range(length - 1):
        options = ['rekey']
        if len(roster) > 2:
            options.append('evict')
        if len(roster) < max_members:
            options.append('join')
        kind = rng.choice(options)

        if kind == 'rekey':
            script.append({'kind': 'rekey', 'controller': rng.choice(roster)})
        elif kind == 'evict':
            controller = rng.choice(roster)
            others = [i for i in roster if i != controller]
            leavers = rng.sample(others, rng.randint(1, len(roster) - 2))
            script.append({'kind': 'evict', 'controller': controller,
                           'leavers': sorted(leavers)})
            roster = [i for i in roster if i not in leavers]
        else:
            l = rng.randint(1, min(3, max_members - len(roster)))
            joiners = [{'id': next_id + j} for j in range(l)]
            next_id += l
            script.append({'kind': 'join', 'collector': rng.choice(roster),
                           'joiners': joiners})
            roster += [j['id'] for j in joiners]
    return script


## Transcripts ##


def group_header(group):
    """Transcript header payload; custom groups carry their p, q and g"""

    header = {'group': group.name}
    if group.name == 'custom':
        header.update(p='0x%x' % group.p, q='0x%x' % group.q,
                      g='0x%x' % group.g)
    return header


_RECORD_FIELDS = (('seq', int), ('epoch', int), ('direction', str),
                  ('kind', str), ('payload', dict))


def _check_record(rec, n):
    """Raise TranscriptParseError unless `rec` has the record shape"""

    for k, kind in _RECORD_FIELDS:
        if k not in rec:
            raise TranscriptParseError("missing field %r" % k, n)
        if not isinstance(rec[k], kind) or isinstance(rec[k], bool):
            raise TranscriptParseError("field %r must be %s" %
                                       (k, kind.__name__), n)
    oracle = rec.get('oracle')
    if oracle is None:
        return
    if not isinstance(oracle, dict):
        raise TranscriptParseError("field 'oracle' must be dict", n)
    for k, kind in (('pairs_before', dict), ('derived', dict),
                    ('pinned', dict), ('joined', list), ('evicted', list)):
        if k in oracle and not isinstance(oracle[k], kind):
            raise TranscriptParseError("oracle field %r must be %s" %
                                       (k, kind.__name__), n)


class Transcript(object):
    """Ordered record of every message of a run.

    Each record is a dict with seq, epoch, direction, sender, receiver, kind,
    payload and, for records with private context, oracle.
    """

    def __init__(self, records=None):
        self.records = list(records or [])

    def append(self, direction, epoch, sender, receiver, kind, payload,
               oracle=None):
        rec = {
            'seq': len(self.records),
            'epoch': epoch,
            'direction': direction,
            'sender': sender,
            'receiver': receiver,
            'kind': kind,
            'payload': payload,
        }
        if oracle is not None:
            rec['oracle'] = oracle
        self.records.append(rec)
        return rec

    @property
    def meta(self):
        if self.records and self.records[0]['direction'] == META:
            return self.records[0]
        return None

    def broadcasts(self):
        return [r for r in self.records
                if r['direction'] == BROADCAST and r['kind'] == 'keying']

    def epoch_keys(self):
        """(epoch, key hex) for every keying broadcast, from the oracle"""

        return [(r['epoch'], r['oracle']['key']) for r in self.broadcasts()]

    def to_jsonl(self):
        return ''.join(dumps(r) + '\n' for r in self.records)

    def write(self, path):
        with open(path, 'w') as f:
            f.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text):
        """Parse JSON Lines, raising TranscriptParseError with line numbers"""

        records = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except ValueError as e:
                raise TranscriptParseError("invalid JSON: %s" % e, n)
            if not isinstance(rec, dict):
                raise TranscriptParseError("records are JSON objects", n)
            _check_record(rec, n)
            records.append(rec)
        if not records:
            raise TranscriptParseError("empty transcript")
        return cls(records)

    @classmethod
    def load(cls, path):
        if not os.path.isfile(path):
            raise TranscriptParseError("transcript not found: %s" % path)
        with open(path, 'r') as f:
            return cls.from_jsonl(f.read())

    def __eq__(self, other):
        if not isinstance(other, Transcript):
            return NotImplemented
        return self.to_jsonl() == other.to_jsonl()

    def __len__(self):
        return len(self.records)


def _pair_to_list(pair):
    return [str(int(pair.r)), str(int(pair.x))]


def _pairs_to_dict(pairs):
    return {str(i): _pair_to_list(p) for i, p in sorted(pairs.items())}


## Oracle ##


class OracleState(object):
    """Everything the simulator knows that members and observers do not.

    Tracks every member's effective pair and the exponents k, rho, sigma with
    K_t = g^k, R_t = g^rho, S_t = g^sigma, recomputed from raw scalars.
    """

    def __init__(self, group):
        self.group = group
        self.pairs = dict()
        self.pinned = set()
        self.k = None
        self.rho = None
        self.sigma = None

    def expected_key(self):
        return exp(self.group.generator, self.k)

    def start(self, variant, controller, fresh):
        others = [p.r for i, p in self.pairs.items() if i != controller]
        c = self.pairs[controller]
        self.k = c.r * sum(others, Scalar(0, self.group))
        self.rho = c.r
        self.sigma = c.x if variant == P1 else None
        self.pairs[controller] = fresh

    def advance(self, controller, fresh, joiner_r=None):
        r1 = fresh.r
        if joiner_r is not None:
            self.k = self.k + self.rho * joiner_r
        self.k = self.k * r1
        self.rho = self.rho * r1
        if self.sigma is not None:
            self.sigma = self.sigma * r1
        self.pairs[controller] = fresh

    def check(self, msg, derived, members):
        """Raise InvariantViolation unless every agreement property holds"""

        g = self.group.generator
        expected = self.expected_key()
        problems = []

        for i, key in derived.items():
            if key != expected:
                problems.append('member %i derived a different key' % i)
        for i in msg.roster:
            if derive_key(msg, i, self.pairs[i]) != expected:
                problems.append('slot identity fails for member %i' % i)
        if msg.R != exp(g, self.rho):
            problems.append('R does not match the scalar chain')
        if self.sigma is not None and msg.S != exp(g, self.sigma):
            problems.append('S does not match the scalar chain')
        if sorted(members) != msg.roster:
            problems.append('roster disagrees with the live members')

        if problems:
            dump = {
                'epoch': msg.epoch,
                'expected': fingerprint(expected),
                'derived': {i: fingerprint(k) for i, k in derived.items()},
                'problems': problems,
            }
            raise InvariantViolation('epoch %i: %s' % (msg.epoch,
                                                       '; '.join(problems)),
                                     dump)


## Simulation ##


class Simulation(object):
    """Drives members through a script over a Bus, recording a Transcript"""

    def __init__(self, group, seed=DEFAULT_SEED):
        self.group = group
        self.seed = seed
        self.rng = RNG(seed)
        self.bus = Bus()
        self.members = dict()
        self.oracle = OracleState(group)
        self.transcript = Transcript()
        self.message = None
        self.retired = set()

    @property
    def epoch(self):
        return self.message.epoch if self.message is not None else 0

    def run(self, script):
        events = parse_scenario(script)
        self.transcript.append(
            META, 0, None, None, 'scenario', group_header(self.group),
            oracle={'seed': self.seed,
                    'script': [e.to_dict() for e in events]})

        handlers = {
            'ika': self._ika,
            'rekey': self._rekey,
            'evict': self._evict,
            'join': self._join,
            'attack_demo': self._attack_demo,
        }
        for index, ev in enumerate(events):
            log.info("event %i: %s (epoch %i)", index, ev.kind, self.epoch)
            try:
                handlers[ev.kind](ev.params)
            except InvariantViolation:
                raise
            except GKEError as e:
                raise ScenarioError("%s: %s" % (type(e).__name__, e), index,
                                    cause=e)
        return self.transcript

    ## helpers ##

    def _pair(self, spec, degenerate=False):
        if spec is None or 'r' not in spec:
            return KeyPair.generate(self.group, self.rng)
        return KeyPair(self.group, parse_int(spec['r']), parse_int(spec['x']),
                       degenerate=degenerate)

    def _add_member(self, spec, degenerate=False):
        i = spec['id']
        if i in self.members or i in self.retired:
            raise RosterConflictError("member id %i was already used" % i)
        member = MemberState(i, self._pair(spec, degenerate))
        self.members[i] = member
        self.oracle.pairs[i] = member.pair
        if 'r' in spec:
            self.oracle.pinned.add(i)
        self.bus.attach(i)
        return member

    def _acting(self, member_id):
        if member_id not in self.members:
            raise NotAMemberError("member %i is not in the roster"
                                       % member_id)
        return self.members[member_id]

    def _record(self, envelopes, epoch):
        for env in sorted(envelopes, key=Envelope.sort_key):
            self.transcript.append(env.direction, epoch, env.sender,
                                   env.receiver, env.kind, env.payload)
        deliver_round(self.bus, envelopes)

    def _broadcast(self, msg, key, fresh, pairs_before, pinned_fresh,
                   extra=None):
        env = Envelope(BROADCAST, msg.controller, ALL, 'keying',
                       message_to_dict(msg), body=msg)
        deliver_round(self.bus, [env])

        derived = {}
        for i in self.bus.members:
            m = self.members[i]
            got = self.bus.drain(i, 'keying')[-1].body
            derived[i] = recover(m, got)

        self.oracle.check(msg, derived, self.members)
        if derived[msg.controller] != key:
            raise InvariantViolation("controller %i lost its own key"
                                     % msg.controller)

        oracle = {
            'pairs_before': _pairs_to_dict(pairs_before),
            'fresh': _pair_to_list(fresh),
            'pinned': {'members': sorted(self.oracle.pinned),
                       'fresh': pinned_fresh},
            'key': element_to_hex(self.oracle.expected_key()),
            'derived': {str(i): element_to_hex(k)
                        for i, k in sorted(derived.items())},
        }
        oracle.update(extra or {})
        self.transcript.append(BROADCAST, msg.epoch, msg.controller, ALL,
                               'keying', message_to_dict(msg), oracle=oracle)
        self.message = msg
        log.info("epoch %i keyed by %i: %s", msg.epoch, msg.controller,
                 fingerprint(key))

    ## events ##

    def _ika(self, p):
        variant, c = p['variant'], p['controller']
        degenerate = p['degenerate']
        for spec in p['members']:
            self._add_member(spec, degenerate)
        ids = sorted(self.members)
        controller = self.members[c]
        pairs_before = dict(self.oracle.pairs)

        # first round: everybody but the controller publishes
        publish = []
        for i in ids:
            if i == c:
                continue
            keys = core.publish_keys(self.members[i], variant)
            publish.append(Envelope(PUBLISH, i, ALL, 'keys',
                                    keys_to_dict(*keys), body=keys))
        self._record(publish, 1)

        # second round: partials, unicast to the controller
        unicasts = []
        for i in ids:
            if i == c:
                continue
            seen = {e.sender: e.body for e in self.bus.drain(i, 'keys')}
            if variant == P1:
                value = core.partial_product(self.members[i], seen, c, ids)
            else:
                value = core.ika2_blinded_partial(self.members[i], seen, c,
                                                  ids)
            unicasts.append(Envelope(UNICAST, i, c, 'partial',
                                     partial_to_dict(value), body=value))
        self._record(unicasts, 1)

        published = {e.sender: e.body for e in self.bus.drain(c, 'keys')}
        partials = {e.sender: e.body for e in self.bus.drain(c, 'partial')}
        fresh = self._pair(p['fresh'], degenerate) if p['fresh'] else None
        if variant == P1:
            msg, key = core.ika1_build_keying(controller, published, partials,
                                              self.rng, fresh)
        else:
            msg, key = core.ika2_build_keying(controller, published, partials,
                                              self.rng, fresh)

        self.oracle.start(variant, c, controller.pair)
        self._broadcast(msg, key, controller.pair, pairs_before,
                        p['fresh'] is not None)

    def _rekey(self, p, leavers=()):
        controller = self._acting(p['controller'])
        pairs_before = dict(self.oracle.pairs)
        fresh = self._pair(p['fresh']) if p['fresh'] else None

        msg, key = core.rekey_evict(controller, self.message, controller.key,
                                    leavers, self.rng, fresh)
        for i in leavers:
            self.bus.detach(i)
            del self.members[i]
            del self.oracle.pairs[i]
            self.retired.add(i)

        self.oracle.advance(controller.id, controller.pair)
        extra = {'evicted': sorted(leavers)} if leavers else None
        self._broadcast(msg, key, controller.pair, pairs_before,
                        p['fresh'] is not None, extra)

    def _evict(self, p):
        self._rekey(p, p['leavers'])

    def _join(self, p):
        for r in p['rounds']:
            self._join_round(r)

    def _join_round(self, p):
        collector = self._acting(p['collector'])
        prev = self.message
        epoch = prev.epoch + 1

        joiners = [self._add_member(spec) for spec in p['joiners']]
        pairs_before = dict(self.oracle.pairs)

        # R_t and S_t are made public for the petitioners
        public = {'R': element_to_hex(prev.R)}
        if prev.has_s:
            public['S'] = element_to_hex(prev.S)
        self._record([Envelope(PUBLISH, collector.id, ALL, 'public-values',
                               public, body=(prev.R, prev.S))], epoch)

        petitions = []
        for j in joiners:
            R_t, S_t = self.bus.drain(j.id, 'public-values')[-1].body
            pet = core.join_petition(j, R_t, S_t)
            petitions.append(Envelope(UNICAST, j.id, collector.id,
                                      'petition', petition_to_dict(pet),
                                      body=pet))
        self._record(petitions, epoch)
        for i in self.bus.members:
            self.bus.drain(i, 'public-values')

        received = [e.body for e in self.bus.drain(collector.id, 'petition')]
        fresh = self._pair(p['fresh']) if p['fresh'] else None
        msg, key = core.join_rekey(collector, prev, collector.key, received,
                                   self.rng, fresh)

        joiner_r = sum((j.pair.r for j in joiners), Scalar(0, self.group))
        self.oracle.advance(collector.id, collector.pair, joiner_r)
        self._broadcast(msg, key, collector.pair, pairs_before,
                        p['fresh'] is not None,
                        {'joined': sorted(j.id for j in joiners)})

    def _attack_demo(self, p):
        msg = self.message
        payload = {'epoch': msg.epoch, 'n': len(msg), 'applicable': True}
        oracle = {}
        try:
            candidate = attack_real_protocol(msg)
        except AttackInapplicableError:
            payload['applicable'] = False
        else:
            payload['candidate'] = element_to_hex(candidate)
            oracle['matches_true_key'] = candidate == self.oracle.expected_key()
        self.transcript.append(LOCAL, msg.epoch, None, None, 'attack',
                               payload, oracle=oracle)


def run_scenario(script, group, seed=DEFAULT_SEED):
    """Run a script and return its Transcript.

    A pure function of (script, group, seed).

    Raises:
        ScenarioError: malformed script, or a protocol error at some event
        InvariantViolation: the oracle caught a disagreement
    """

    return Simulation(group, seed).run(script)


def replay_transcript(transcript, group):
    """Re-run the script and seed stored in a transcript's header"""

    meta = transcript.meta
    if meta is None or 'oracle' not in meta:
        raise TranscriptParseError("transcript has no replayable header", 1)
    return run_scenario(meta['oracle']['script'], group,
                        meta['oracle']['seed'])


## Verification ##


class Check(object):
    def __init__(self, name, epoch, passed, detail=''):
        self.name = name
        self.epoch = epoch
        self.passed = passed
        self.detail = detail

    def __repr__(self):
        return "<Check %s epoch %s %s>" % (self.name, self.epoch,
                                           'PASS' if self.passed else 'FAIL')


class VerificationReport(object):
    def __init__(self):
        self.checks = []

    def add(self, name, epoch, passed, detail=''):
        self.checks.append(Check(name, epoch, passed, detail))
        if not passed:
            log.warning("check %s failed at epoch %s: %s", name, epoch,
                        detail)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def table(self):
        rows = [(c.epoch, c.name, 'PASS' if c.passed else 'FAIL', c.detail)
                for c in self.checks]
        return tabulate(rows, headers=['epoch', 'check', 'result', 'detail'])

    def __bool__(self):
        return self.passed


def _pairs_from_dict(d, group):
    return {int(i): KeyPair(group, parse_int(r), parse_int(x),
                            degenerate=True)
            for i, (r, x) in d.items()}


def _wire_elements(rec):
    """Every hex element string in a record's payload"""

    p = rec['payload']
    for k in ('pub_r', 'pub_x', 'partial', 'blinded_r', 'blinded_x', 'R', 'S'):
        if p.get(k) is not None:
            yield k, p[k]
    slots = p.get('slots')
    if isinstance(slots, dict):
        for i, y in slots.items():
            yield 'slot %s' % i, y


def verify_transcript(t, group):
    """Independently re-check every epoch of a transcript.

    Recomputes each K_t from the raw scalars in the oracle sections,
    re-derives every member's key, and checks slot identities, the R/S chain,
    epoch chaining, partials, petitions and subgroup membership of every
    wire element.

    Raises:
        TranscriptParseError: a record cannot be interpreted
    """

    report = VerificationReport()
    g = group.generator
    zero = Scalar(0, group)

    k = rho = sigma = None
    last_epoch = 0
    carried = prev = None
    pending = []  # non-broadcast records of the epoch being built

    for line, rec in enumerate(t.records, 1):
        direction = rec['direction']
        if direction in (META, LOCAL):
            continue
        if direction != BROADCAST:
            pending.append((line, rec))
            continue

        epoch = rec['epoch']
        oracle = rec.get('oracle')
        if not oracle:
            raise TranscriptParseError("broadcast without oracle section",
                                       line)

        # membership of every element seen in this epoch
        outside = []
        for ln, r in pending + [(line, rec)]:
            for where, h in _wire_elements(r):
                try:
                    v = element_from_hex(h, group, check=False)
                except WireError as e:
                    raise TranscriptParseError(str(e), ln)
                if not group.contains(v.value):
                    outside.append('%s from %s' % (where, r['sender']))
        report.add('membership', epoch, not outside, ', '.join(outside[:4]))

        try:
            msg = message_from_dict(rec['payload'], group, check=False)
            before = _pairs_from_dict(oracle['pairs_before'], group)
            fr, fx = oracle['fresh']
            fresh = KeyPair(group, parse_int(fr), parse_int(fx),
                            degenerate=True)
            derived = {int(i): element_from_hex(h, group, check=False)
                       for i, h in oracle['derived'].items()}
            claimed = element_from_hex(oracle['key'], group, check=False)
        except (AttributeError, KeyError, TypeError, ValueError,
                WireError) as e:
            raise TranscriptParseError("bad keying record: %s" % e, line)

        report.add('chaining', epoch, epoch == last_epoch + 1,
                   'epoch %i follows %i' % (epoch, last_epoch))

        if carried is not None:
            stale = [i for i, p in before.items()
                     if i in carried and carried[i] != p]
            report.add('pair-continuity', epoch, not stale,
                       'members %s' % stale if stale else '')

        c = msg.controller
        if c not in before:
            raise TranscriptParseError("controller %i has no oracle pair" % c,
                                       line)
        joined = oracle.get('joined', [])
        if any(j not in before for j in joined):
            raise TranscriptParseError("joiner without oracle pair", line)

        if k is None:
            # initial agreement
            others = [p.r for i, p in before.items() if i != c]
            k = before[c].r * sum(others, zero)
            rho = before[c].r
            sigma = before[c].x if msg.has_s else None
            _check_partials(report, epoch, pending, before, c, msg, group)
        else:
            if joined:
                k = k + rho * sum((before[j].r for j in joined), zero)
                _check_petitions(report, epoch, pending, before, prev, group)
            k = k * fresh.r
            rho = rho * fresh.r
            if sigma is not None:
                sigma = sigma * fresh.r

        expected = exp(g, k)
        report.add('expected-key', epoch, claimed == expected,
                   '' if claimed == expected else 'oracle key differs')

        bad_chain = []
        if msg.R != exp(g, rho):
            bad_chain.append('R')
        if (sigma is None) != (msg.S is None) or \
                (sigma is not None and msg.S != exp(g, sigma)):
            bad_chain.append('S')
        report.add('chain-identity', epoch, not bad_chain,
                   ', '.join(bad_chain))

        after = {i: p for i, p in before.items() if i in msg.slots}
        after[c] = fresh
        missing = [i for i in msg.roster if i not in after]
        bad_slots = [i for i in msg.roster
                     if i in after and
                     derive_key(msg, i, after[i]) != expected]
        report.add('slot-identity', epoch, not bad_slots and not missing,
                   'member(s) %s' % ', '.join(map(str, bad_slots + missing))
                   if bad_slots or missing else '')

        disagree = [i for i in msg.roster if derived.get(i) != expected]
        report.add('agreement', epoch, not disagree,
                   'member(s) %s' % ', '.join(map(str, disagree))
                   if disagree else '')

        last_epoch = epoch
        carried = after
        prev = msg
        pending = []

    if k is None:
        raise TranscriptParseError("transcript holds no keying broadcast")
    return report


def _check_partials(report, epoch, pending, before, c, msg, group):
    g = group.generator
    pubs = {}
    for _, r in pending:
        if r['kind'] == 'keys':
            pubs[r['sender']] = keys_from_dict(r['payload'], group, False)[0]

    bad = []
    for _, r in pending:
        if r['kind'] != 'partial':
            continue
        i = r['sender']
        value = partial_from_dict(r['payload'], group, False)
        expected = group.identity
        for j, pub in pubs.items():
            if j not in (i, c):
                expected = expected * pub
        if not msg.has_s:
            if i not in before:
                bad.append(i)
                continue
            expected = expected * exp(g, -before[i].x)
        if value != expected:
            bad.append(i)
    report.add('partials', epoch, not bad,
               'member(s) %s' % ', '.join(map(str, bad)) if bad else '')


def _check_petitions(report, epoch, pending, before, prev, group):
    bad = []
    for _, r in pending:
        if r['kind'] != 'petition':
            continue
        pet = petition_from_dict(r['payload'], group, False)
        pair = before.get(pet.joiner)
        if pair is None or pet.blinded_r != exp(prev.R, pair.r) or \
                pet.blinded_x != exp(prev.second, pair.x):
            bad.append(pet.joiner)
    report.add('petitions', epoch, not bad,
               'joiner(s) %s' % ', '.join(map(str, bad)) if bad else '')


## Operational secrecy ##


def secrecy_report(t, group):
    """Forward and backward confidentiality, checked operationally.

    For every evicted member, its recovery formula applied to every slot of
    every later broadcast must miss that broadcast's key; for every joiner,
    the same over every earlier broadcast. Small groups collide by chance,
    so run this on large ones.

    Returns:
        list: (kind, member, epoch, slot) for every slot that yielded the key
    """

    epochs = []
    for rec in t.broadcasts():
        msg = message_from_dict(rec['payload'], group, check=False)
        key = element_from_hex(rec['oracle']['key'], group, check=False)
        before = _pairs_from_dict(rec['oracle']['pairs_before'], group)
        epochs.append((msg, key, before, rec['oracle']))

    leaks = []
    for n, (msg, key, before, oracle) in enumerate(epochs):
        for i in oracle.get('evicted', []):
            pair = before[i]
            for later, later_key, _, _ in epochs[n:]:
                for s, y in later.slots.items():
                    if recovery_formula(y, later, pair) == later_key:
                        leaks.append(('evicted', i, later.epoch, s))
        for j in oracle.get('joined', []):
            pair = before[j]
            for earlier, earlier_key, _, _ in epochs[:n]:
                for s, y in earlier.slots.items():
                    if recovery_formula(y, earlier, pair) == earlier_key:
                        leaks.append(('joined', j, earlier.epoch, s))
    return leaks
