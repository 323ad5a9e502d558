"""Command line entry point.

    opengke run --group tiny --scenario scenarios/f1.json --out t.jsonl
    opengke verify t.jsonl
    opengke attack t.jsonl
    opengke attack --single-key 4 --group tiny --seed 1
    opengke groups

Exit codes: 0 success, 1 invariant or verification failure, 2 usage or parse
error, 3 inapplicable attack. Errors go to stderr as one JSON object.
"""


import argparse
import logging
import sys

from tabulate import tabulate

from . import __version__
from .adversary import attack_report, single_key_report
from .config import Config
from .errors import (AttackInapplicableError, GKEError, InvariantViolation)
from .groups import PRESETS, load_group
from .netsim import (Transcript, load_scenario, run_scenario,
                     verify_transcript)
from .protocols.wire import dumps, element_from_hex
from .utils import RNG, fingerprint


log = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INAPPLICABLE = 3

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _setup_logging(verbosity):
    level = LOG_LEVELS[min(verbosity, len(LOG_LEVELS) - 1)]
    logging.basicConfig(stream=sys.stderr, level=level,
                        format='%(levelname)s %(name)s: %(message)s')


def _error(e):
    sys.stderr.write(dumps({'error': type(e).__name__,
                            'message': str(e)}) + '\n')


def _epoch_table(transcript, group):
    rows = []
    for rec in transcript.broadcasts():
        key = element_from_hex(rec['oracle']['key'], group, check=False)
        p = rec['payload']
        rows.append((p['epoch'], p['variant'], p['controller'],
                     len(p['roster']), fingerprint(key)))
    return tabulate(rows, headers=['epoch', 'variant', 'controller', 'n',
                                   'key'])


## Commands ##


def cmd_run(config):
    """Run a scenario, write its transcript and check it.

    Returns:
        int: exit code
    """

    group = config.group()
    script = load_scenario(config.scenario)
    transcript = run_scenario(script, group, config.seed)
    if config.out:
        transcript.write(config.out)
        log.info("transcript written to %s", config.out)

    report = verify_transcript(transcript, group)
    print(_epoch_table(transcript, group))
    print()
    print('%i epoch(s), %i check(s): %s'
          % (len(transcript.broadcasts()), len(report.checks),
             'PASS' if report.passed else 'FAIL'))
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_verify(path, config):
    transcript = Transcript.load(path)
    group = config.group()
    report = verify_transcript(transcript, group)
    print(report.table())
    print()
    print('PASS' if report.passed else 'FAIL')
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_attack(path, single_key, config):
    """Product attack on a real transcript, or on a synthesized single-key
    broadcast of `single_key` members.

    The expected verdict is recovery for single-key instances and failure
    for real transcripts.
    """

    group = config.group()
    if single_key is not None:
        report = single_key_report(single_key, group, RNG(config.seed))
        expected = True
    else:
        report = attack_report(Transcript.load(path), group)
        expected = False
        if not report['applicable']:
            raise AttackInapplicableError("n - 2 = %i is not invertible mod q"
                                          % (report['n'] - 2))

    print(dumps(report))
    if report['matches_true_key'] is None:
        print('RECOVERED: unknown')
        return EXIT_OK
    print('RECOVERED: %s' % ('yes' if report['matches_true_key'] else 'no'))
    return EXIT_OK if report['matches_true_key'] == expected else EXIT_FAILURE


def cmd_groups():
    rows = []
    for name in sorted(PRESETS, key=lambda n: PRESETS[n][0]):
        group = load_group(name)
        rows.append((name, group.p.bit_length(), group.q.bit_length(),
                     group.g))
    print(tabulate(rows, headers=['preset', 'p bits', 'q bits', 'g']))
    return EXIT_OK


## Argument parsing ##


def _add_group_args(p):
    p.add_argument('--group', help='group preset (%s)'
                   % ', '.join(sorted(PRESETS)))
    p.add_argument('--p', help='custom group modulus (decimal or 0x-hex)')
    p.add_argument('--q', help='custom group order')
    p.add_argument('--g', help='custom group generator')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='opengke',
        description='Group key exchange suite and protocol simulator.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('--config', help='INI or JSON configuration file '
                        '(default: $OPENGKE_CONFIG)')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='more logging on stderr (repeatable)')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('run', help='run a scenario and write its transcript')
    _add_group_args(p)
    p.add_argument('--scenario', required=True, help='scenario JSON file')
    p.add_argument('--seed', type=int)
    p.add_argument('--out', help='transcript output (JSON Lines)')

    p = sub.add_parser('verify', help='re-check every epoch of a transcript')
    p.add_argument('transcript')
    _add_group_args(p)

    p = sub.add_parser('attack', help='run the product attack')
    p.add_argument('transcript', nargs='?')
    p.add_argument('--single-key', type=int, metavar='N',
                   help='attack a synthesized single-key broadcast of N '
                        'members instead')
    _add_group_args(p)
    p.add_argument('--seed', type=int)

    sub.add_parser('groups', help='list group presets')
    return parser


def _transcript_group(path):
    """(preset, custom) named in a transcript header, tiny if unknown"""

    try:
        meta = Transcript.load(path).meta
    except GKEError:
        return 'tiny', None
    header = (meta or {}).get('payload', {})
    name = header.get('group')
    if name in PRESETS:
        return name, None
    if name == 'custom' and all(k in header for k in ('p', 'q', 'g')):
        return None, (header['p'], header['q'], header['g'])
    return 'tiny', None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        preset, custom = 'tiny', None
        if getattr(args, 'transcript', None):
            preset, custom = _transcript_group(args.transcript)
        config = Config.from_args(args, default_preset=preset,
                                  default_custom=custom)
        _setup_logging(config.verbosity)

        if args.command == 'run':
            return cmd_run(config)
        if args.command == 'verify':
            return cmd_verify(args.transcript, config)
        if args.command == 'attack':
            if (args.transcript is None) == (args.single_key is None):
                parser.error('attack needs a transcript or --single-key')
            return cmd_attack(args.transcript, args.single_key, config)
        return cmd_groups()
    except AttackInapplicableError as e:
        _error(e)
        return EXIT_INAPPLICABLE
    except InvariantViolation as e:
        _error(e)
        log.debug("invariant dump: %s", e.dump)
        return EXIT_FAILURE
    except GKEError as e:
        _error(e)
        return EXIT_USAGE
