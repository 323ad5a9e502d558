"""In-memory message fabric.

Delivery is synchronous, loss free and ordered: within a round, publications
come first, then unicasts in ascending sender id, then broadcasts. Receivers
of a publication or broadcast are visited in ascending id. Nothing depends on
the order in which envelopes were handed to the bus.
"""


import logging

from collections import namedtuple

from ..errors import RoutingError


log = logging.getLogger(__name__)


PUBLISH = 'publish'
UNICAST = 'unicast'
BROADCAST = 'broadcast'
DIRECTIONS = (PUBLISH, UNICAST, BROADCAST)

ALL = 'ALL'
"""str: receiver of publications and broadcasts"""


DeliveryRecord = namedtuple('DeliveryRecord',
                            ['seq', 'direction', 'sender', 'receiver', 'kind'])


class Envelope(object):
    """One message in flight.

    Args:
        direction (str): one of DIRECTIONS
        sender (int): sending member id
        receiver (int or str): member id for unicasts, ALL otherwise
        kind (str): payload kind, e.g. 'keys', 'partial', 'petition', 'keying'
        payload (dict): wire dict of the message
        body: the decoded object, handed to receivers as is
    """

    def __init__(self, direction, sender, receiver, kind, payload, body=None):
        if direction not in DIRECTIONS:
            raise ValueError("unknown direction %r" % direction)
        if direction != UNICAST:
            receiver = ALL
        self.direction = direction
        self.sender = sender
        self.receiver = receiver
        self.kind = kind
        self.payload = payload
        self.body = body

    def sort_key(self):
        return DIRECTIONS.index(self.direction), self.sender

    def __repr__(self):
        temp = "<Envelope %s %s %s -> %s>"
        return temp % (self.direction, self.kind, self.sender, self.receiver)


class Bus(object):
    """Members attached to the fabric and their inboxes"""

    def __init__(self):
        self._inboxes = dict()
        self.seq = 0

    @property
    def members(self):
        return sorted(self._inboxes)

    def __contains__(self, member_id):
        return member_id in self._inboxes

    def attach(self, member_id):
        self._inboxes.setdefault(member_id, [])

    def detach(self, member_id):
        """Remove a member; later unicasts to it fail to route"""

        self._inboxes.pop(member_id, None)

    def inbox(self, member_id, kind=None):
        if member_id not in self._inboxes:
            raise RoutingError("member %s is not on the bus" % member_id)
        return [e for e in self._inboxes[member_id]
                if kind is None or e.kind == kind]

    def drain(self, member_id, kind=None):
        """Return and remove the member's envelopes of the given kind"""

        taken = self.inbox(member_id, kind)
        self._inboxes[member_id] = [e for e in self._inboxes[member_id]
                                    if e not in taken]
        return taken

    def _push(self, member_id, envelope):
        self._inboxes[member_id].append(envelope)
        self.seq += 1
        return DeliveryRecord(self.seq, envelope.direction, envelope.sender,
                              member_id, envelope.kind)


def deliver(bus, message):
    """Deliver one envelope.

    Returns:
        list:DeliveryRecord, one per receiver in ascending id

    Raises:
        RoutingError: the sender or a unicast receiver is not on the bus
    """

    if message.sender not in bus:
        raise RoutingError("sender %s is not on the bus" % message.sender)

    if message.direction == UNICAST:
        if message.receiver not in bus:
            raise RoutingError("no route to member %s" % message.receiver)
        receivers = [message.receiver]
    else:
        receivers = bus.members

    records = [bus._push(i, message) for i in receivers]
    log.debug("delivered %r to %i receiver(s)", message, len(records))
    return records


def deliver_round(bus, messages):
    """Deliver a whole round in canonical order"""

    records = []
    for m in sorted(messages, key=Envelope.sort_key):
        records.extend(deliver(bus, m))
    return records
