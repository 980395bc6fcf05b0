"""
===================
Experiment Control
===================

Run the fingerprinting experiments from the command line::

    synprint fleet --scenario scenario.json --out out/demo
    synprint collect --scenario scenario.json --out out/demo
    synprint verify --scenario scenario.json --out out/demo

Exit codes: 0 on success, 1 when the scenario or an artifact is invalid
or missing, 2 when verification flags a job.
"""

import argparse
import logging as log
import os
import sys
from typing import Any, Dict, Optional, Sequence

from synprint.core.types import Document
from synprint.experiments.pipelines import COMMANDS, Command, check_out_dir
from synprint.experiments.scenario import Scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FLAGGED = 2


class Control:
    """ Control experiments from the command line

    ``commands`` maps command names to callables taking a scenario and
    returning a summary document.
    """

    def __init__(
            self,
            commands: Optional[Dict[str, Command]] = None,
            args: Optional[Sequence[str]] = None,
    ) -> None:
        self.commands_library = commands or COMMANDS
        self.args = self.parse_args(args)
        self.output_data: Optional[Document] = None

    def parse_args(
            self, args: Optional[Sequence[str]] = None
    ) -> argparse.Namespace:
        parser = argparse.ArgumentParser(
            prog='synprint',
            description='fingerprint simulated quantum backends from '
                        'error-correction syndromes')
        parser.add_argument(
            'command',
            type=str,
            choices=list(self.commands_library.keys()),
            help='the experiment to run')
        parser.add_argument(
            '--scenario', '-s',
            type=str,
            default=None,
            help='scenario JSON file; defaults apply to missing keys')
        parser.add_argument(
            '--seed',
            type=int,
            default=None,
            help='override the scenario seed')
        parser.add_argument(
            '--out', '-o',
            type=str,
            default=None,
            help='override the output directory')
        parser.add_argument(
            '--include-data',
            action='store_true',
            help='append the final data readout to every syndrome')
        parser.add_argument(
            '--force',
            action='store_true',
            help='write the fleet into a non-empty output directory')
        return parser.parse_args(args)

    def run(self) -> int:
        command = str(self.args.command)
        try:
            scenario = Scenario.load(
                self.args.scenario,
                seed=self.args.seed,
                out_dir=self.args.out,
                include_data=True if self.args.include_data else None)
            if command == 'fleet':
                check_out_dir(scenario.out_dir, self.args.force)
            self.output_data = self.run_command(command, scenario)
        except (ValueError, FileNotFoundError) as error:
            print(f'synprint {command}: {error}', file=sys.stderr)
            return EXIT_INVALID
        return self.report(command, self.output_data)

    def run_command(self, command: str, scenario: Scenario) -> Document:
        experiment = self.commands_library[command]
        return experiment(scenario)

    @staticmethod
    def report(command: str, output: Document) -> int:
        if command != 'verify':
            print(f'{command}: {output}')
            return EXIT_OK
        for job in output['jobs']:
            print(
                f"{job['job_id']} claimed {job['claimed']} "
                f"predicted {job['predicted'] or '?'}: {job['verdict']}")
        return EXIT_FLAGGED if output['flagged'] else EXIT_OK


def main(args: Optional[Sequence[str]] = None) -> Any:
    log.basicConfig(level=os.environ.get('LOGLEVEL', log.WARNING))
    return sys.exit(Control(args=args).run())


# testing

def test_invalid_scenario_exits_with_one(tmp_path: Any) -> None:
    scenario = tmp_path / 'bad.json'
    scenario.write_text('{"fleet": {"n_backends": 1}}')
    control = Control(args=[
        'fleet', '--scenario', str(scenario), '--out', str(tmp_path / 'out')])
    assert control.run() == EXIT_INVALID


def test_missing_fleet_exits_with_one(tmp_path: Any) -> None:
    control = Control(args=['collect', '--out', str(tmp_path / 'empty')])
    assert control.run() == EXIT_INVALID


def test_fleet_refuses_non_empty_dir(tmp_path: Any) -> None:
    (tmp_path / 'stale.txt').write_text('left over')
    control = Control(args=['fleet', '--out', str(tmp_path)])
    assert control.run() == EXIT_INVALID
    forced = Control(args=['fleet', '--out', str(tmp_path), '--force'])
    assert forced.run() == EXIT_OK
    assert (tmp_path / 'profiles' / 'backend-00.json').exists()


def test_include_data_flag_reaches_the_scenario(tmp_path: Any) -> None:
    commands: Dict[str, Command] = {
        'train': lambda scenario: {'include_data': scenario.include_data}}
    plain = Control(commands=commands, args=['train', '--out', str(tmp_path)])
    assert plain.run() == EXIT_OK
    assert plain.output_data == {'include_data': False}
    flagged = Control(
        commands=commands, args=['train', '--include-data', '--out', str(tmp_path)])
    assert flagged.run() == EXIT_OK
    assert flagged.output_data == {'include_data': True}


if __name__ == '__main__':
    main()
