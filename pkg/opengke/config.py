"""opengke configuration manager

An optional configuration file supplies defaults for the command line. It is
either an INI file:

    [opengke]
    group = medium
    seed = 1729
    verbosity = 1

    [group]
    p = 0x...
    q = 0x...
    g = 2

or a JSON object with the same keys ({"group": ..., "seed": ..., "p": ...}).
Its path comes from --config or the OPENGKE_CONFIG environment variable.
Flags always win over file values.
"""

import configparser
import json
import logging
import os

from .errors import ParameterError
from .groups import load_group
from .utils import DEFAULT_SEED, parse_int


log = logging.getLogger(__name__)


ENV_VAR = 'OPENGKE_CONFIG'
SECTION = 'opengke'
GROUP_SECTION = 'group'


class ConfigManager(object):
    """Reads a configuration file into a flat dict of known keys"""

    KEYS = ('group', 'seed', 'verbosity', 'p', 'q', 'g')

    def __init__(self, path=None):
        if path is None:
            path = os.environ.get(ENV_VAR) or None
        self.path = path
        self.values = dict()
        if path is not None:
            self.load(path)

    def load(self, path):
        if not os.path.isfile(path):
            raise ParameterError("config file not found: %s" % path)

        with open(path, 'r') as f:
            text = f.read()

        if text.lstrip().startswith('{'):
            try:
                data = json.loads(text)
            except ValueError as e:
                raise ParameterError("config file is not valid JSON: %s" % e)
            if not isinstance(data, dict):
                raise ParameterError("JSON config must be an object")
            # a nested "group" object is a custom group
            if isinstance(data.get('group'), dict):
                data.update(data.pop('group'))
        else:
            cp = configparser.ConfigParser()
            try:
                cp.read_string(text, source=path)
            except configparser.Error as e:
                raise ParameterError("cannot parse config file: %s" % e)
            data = {}
            if cp.has_section(SECTION):
                data.update(cp[SECTION])
            if cp.has_section(GROUP_SECTION):
                data.update(cp[GROUP_SECTION])

        unknown = sorted(set(data) - set(self.KEYS))
        if unknown:
            log.warning("ignoring unknown config keys: %s", ', '.join(unknown))
        self.values = {k: v for k, v in data.items() if k in self.KEYS}
        log.debug("loaded config from %s", path)

    def get(self, key, default=None):
        return self.values.get(key, default)


class Config(object):
    """Settings for one CLI command.

    Attributes:
        preset (str): group preset name, or None for a custom group
        custom (tuple): (p, q, g) of a custom group, or None
        seed (int)
        scenario (str): scenario path
        out (str): transcript output path
        verbosity (int): 0 warnings, 1 info, 2 debug
    """

    def __init__(self, preset=None, custom=None, seed=DEFAULT_SEED,
                 scenario=None, out=None, verbosity=0):
        if preset is not None and custom is not None:
            raise ParameterError("give either a group preset or a custom "
                                 "p, q, g, not both")
        self.preset = preset
        self.custom = custom
        self.seed = seed
        self.scenario = scenario
        self.out = out
        self.verbosity = verbosity

    @classmethod
    def from_args(cls, args, manager=None, default_preset='tiny',
                  default_custom=None):
        """Merge parsed arguments over a ConfigManager's values.

        `default_preset` or `default_custom` (p, q, g) apply only when
        neither the flags nor the file name a group.
        """

        if manager is None:
            manager = ConfigManager(getattr(args, 'config', None))

        flag_custom = [getattr(args, k, None) for k in ('p', 'q', 'g')]
        flag_preset = getattr(args, 'group', None)
        if flag_preset is not None and any(v is not None for v in flag_custom):
            raise ParameterError("--group cannot be combined with --p/--q/--g")

        if flag_preset is not None or any(v is not None for v in flag_custom):
            preset, custom = flag_preset, flag_custom
        else:
            preset = manager.get('group')
            custom = [manager.get(k) for k in ('p', 'q', 'g')]

        if all(v is None for v in custom):
            custom = None
        elif any(v is None for v in custom):
            raise ParameterError("custom groups need all of p, q and g")
        if preset is None and custom is None:
            if default_custom is not None:
                custom = list(default_custom)
            else:
                preset = default_preset

        seed = getattr(args, 'seed', None)
        if seed is None:
            seed = manager.get('seed', DEFAULT_SEED)
        verbosity = getattr(args, 'verbose', 0)
        if not verbosity:
            try:
                verbosity = int(manager.get('verbosity', 0))
            except (TypeError, ValueError):
                raise ParameterError("verbosity must be an integer")

        try:
            seed = parse_int(seed)
        except ValueError:
            raise ParameterError("seed must be an integer")

        return cls(preset=preset, custom=tuple(custom) if custom else None,
                   seed=seed,
                   scenario=getattr(args, 'scenario', None),
                   out=getattr(args, 'out', None),
                   verbosity=verbosity)

    def group(self):
        if self.custom is not None:
            p, q, g = self.custom
            return load_group(p=p, q=q, g=g)
        return load_group(self.preset)

    def __repr__(self):
        source = self.preset if self.preset else 'custom'
        return "<Config group %s seed %i>" % (source, self.seed)
