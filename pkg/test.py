#!/usr/bin/env python3

from opengke.groups import load_group
from opengke.netsim import load_scenario, run_scenario, verify_transcript
from opengke.adversary import attack_report
from opengke.protocols.wire import element_from_hex
group = load_group('tiny')
script = load_scenario('scenarios/f1.json')
t = run_scenario(script, group, seed=7)
for epoch, key in t.epoch_keys():
    print('epoch', epoch, 'key', element_from_hex(key, group))
report = verify_transcript(t, group)
print(report.table())
print('PASS' if report.passed else 'FAIL')
print(attack_report(t, group))
