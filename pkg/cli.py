#!/usr/bin/env python3
"""
Hashed-target NDP lab CLI
Runs a neighbor-discovery scenario on the simulated link and writes a JSON or CSV report.
"""

import asyncio
import os
import sys
from typing import Dict, Optional, Tuple

import click
from dotenv import load_dotenv
from rich.console import Console

# Load environment variables
load_dotenv()

from experiment.config import Scenario, ScenarioConfig, build_config, env_int
from experiment.report import emit_report, write_pcap, write_trace
from experiment.runner import replay_first_repetition, run_scenario_async
from progress_display import (
    ExperimentProgress,
    create_error_display,
    create_summary_display,
    create_trace_display,
)
from sim.adversary import AttackStrategy
from utils.errors import ConfigurationError, NdpLabError
from utils.file_utils import create_backup, with_suffix_stem

console = Console()


def parse_latencies(values: Tuple[str, ...]) -> Dict[str, int]:
    """['bob=5', 'intruder=1'] -> {'bob': 5, 'intruder': 1}"""
    latencies = {}
    problems = []
    for value in values:
        name, sep, ticks = value.partition("=")
        if not sep or not name.strip():
            problems.append(f"--latency {value!r}: expected <node>=<ticks>")
            continue
        try:
            latencies[name.strip().lower()] = int(ticks)
        except ValueError:
            problems.append(f"--latency {value!r}: ticks must be an integer")
    if problems:
        raise ConfigurationError("Invalid latency flags", problems)
    return latencies


@click.command()
@click.option('--scenario', required=True, type=click.Choice([s.value for s in Scenario]),
              help='Scenario to run')
@click.option('--nodes', 'node_count', default=3, show_default=True, help='Hosts on the link (attack scenarios include the intruder)')
@click.option('--reps', 'repetitions', type=int, default=None, help='Repetitions (default: NDPLAB_REPETITIONS or 30)')
@click.option('--seed', type=int, default=None, help='Base seed; repetition i uses seed + i (default: NDPLAB_SEED or 0)')
@click.option('--attacker-strategy', type=click.Choice([s.value for s in AttackStrategy]), default=None,
              help='Override the attack scenario\'s default strategy')
@click.option('--burst', 'burst_size', default=5, show_default=True, help='Forged NAs per observed NS')
@click.option('--pool-size', default=8, show_default=True, help='Candidate addresses for guess_pool')
@click.option('--latency', 'latency_flags', multiple=True, help='Per-node delivery latency, e.g. --latency bob=5')
@click.option('--dh-group', default=None, type=click.Choice(['modp2048', 'test']),
              help='DH group (default: NDPLAB_DH_GROUP or modp2048)')
@click.option('--key-exchange', default='eager', show_default=True, type=click.Choice(['eager', 'on_demand']),
              help='Exchange keys between every pair up front, or only alice-bob')
@click.option('--timeout', 'resolution_timeout', type=int, default=None,
              help='Resolution timeout in ticks (default: NDPLAB_RESOLUTION_TIMEOUT or 100)')
@click.option('--frame-overhead', type=int, default=None,
              help='Header bytes counted per frame (default: NDPLAB_FRAME_OVERHEAD or 54)')
@click.option('--workers', type=int, default=None, help='Repetitions run in parallel (default: NDPLAB_WORKERS or 1)')
@click.option('--out', 'output_path', default=None, help='Report file path')
@click.option('--format', 'output_format', default='json', show_default=True, type=click.Choice(['json', 'csv']))
@click.option('--trace', 'trace_path', default=None, help='Event-trace CSV for the first repetition')
@click.option('--pcap', 'pcap_path', default=None, help='pcap capture of the first repetition')
@click.option('--backup', is_flag=True, help='Keep a copy of an existing report before overwriting it')
@click.option('--verbose', is_flag=True, help='Print the first repetition\'s event trace')
@click.option('--no-progress', is_flag=True, help='Disable the live progress display')
def main(scenario: str, node_count: int, repetitions: Optional[int], seed: Optional[int],
         attacker_strategy: Optional[str], burst_size: int, pool_size: int, latency_flags: Tuple[str, ...],
         dh_group: Optional[str], key_exchange: str, resolution_timeout: Optional[int],
         frame_overhead: Optional[int], workers: Optional[int], output_path: Optional[str],
         output_format: str, trace_path: Optional[str], pcap_path: Optional[str],
         backup: bool, verbose: bool, no_progress: bool):
    """
    Hashed-target NDP lab - reproduce the resolution overhead and spoofing experiments

    Examples:
        python cli.py --scenario baseline_attack --latency intruder=1 --latency bob=5
        python cli.py --scenario overhead_compare --out results/overhead.json
        python cli.py --scenario proposal_attack_guess --pool-size 8 --format csv --out guess.csv
    """
    try:
        config = build_config(
            scenario=scenario,
            node_count=node_count,
            repetitions=repetitions if repetitions is not None else env_int('NDPLAB_REPETITIONS', 30),
            seed=seed if seed is not None else env_int('NDPLAB_SEED', 0),
            latencies=parse_latencies(latency_flags),
            attacker_strategy=attacker_strategy,
            burst_size=burst_size,
            pool_size=pool_size,
            dh_group=dh_group or os.getenv('NDPLAB_DH_GROUP', 'modp2048'),
            resolution_timeout=resolution_timeout if resolution_timeout is not None
            else env_int('NDPLAB_RESOLUTION_TIMEOUT', 100),
            frame_overhead=frame_overhead if frame_overhead is not None else env_int('NDPLAB_FRAME_OVERHEAD', 54),
            key_exchange=key_exchange,
            workers=workers if workers is not None else env_int('NDPLAB_WORKERS', 1),
            output_path=output_path,
            output_format=output_format,
            trace_path=trace_path,
            pcap_path=pcap_path,
        )
    except NdpLabError as e:
        create_error_display(str(e))
        sys.exit(1)

    console.print(f"🚀 [bold blue]Hashed-target NDP lab[/bold blue]")
    console.print(f"🧪 Scenario: {config.scenario.value}")
    console.print(f"🖧  Nodes: {', '.join(config.node_names)}")
    console.print(f"🔁 Repetitions: {config.repetitions} (seed {config.seed})")
    if config.strategy:
        console.print(f"🕵️  Attacker: {config.strategy.value}, burst {config.burst_size}")

    try:
        asyncio.run(run_experiment(config, backup=backup, verbose=verbose, show_progress=not no_progress))
    except NdpLabError as e:
        create_error_display(str(e))
        sys.exit(1)


async def run_experiment(config: ScenarioConfig, backup: bool = False, verbose: bool = False,
                         show_progress: bool = True):
    """Main pipeline: simulate all repetitions, aggregate, write outputs"""
    progress = ExperimentProgress(config.repetitions, enabled=show_progress)
    progress.start()

    current = "simulate"
    try:
        progress.step("configure", "completed", f"{config.scenario.value}, {config.node_count} nodes")

        progress.step("simulate", "running", f"{config.workers} worker(s)")
        report = await run_scenario_async(config, on_repetition=progress.repetition_done)
        progress.step("simulate", "completed", f"{config.repetitions} repetitions")

        progress.step("aggregate", "completed", ", ".join(a.mode for a in report.aggregate))

        current = "write"
        progress.step("write", "running")
        written = []
        if config.output_path:
            if backup and os.path.exists(config.output_path):
                create_backup(config.output_path)
            await emit_report(report, config.output_format, config.output_path)
            written.append(config.output_path)

        sims = {}
        if config.trace_path or config.pcap_path or verbose:
            sims = replay_first_repetition(config)
        multi = len(sims) > 1
        for mode, sim in sims.items():
            if config.trace_path:
                path = with_suffix_stem(config.trace_path, mode) if multi else config.trace_path
                await write_trace(sim, path)
                written.append(path)
            if config.pcap_path:
                path = with_suffix_stem(config.pcap_path, mode) if multi else config.pcap_path
                write_pcap(sim, path)
                written.append(path)
        progress.step("write", "completed", ", ".join(written) if written else "nothing requested")
    except Exception as e:
        progress.step(current, "error", str(e)[:60])
        progress.stop()
        raise

    progress.stop()

    if verbose:
        for sim in sims.values():
            create_trace_display(sim)
    create_summary_display(report)
    for path in written:
        console.print(f"💾 Wrote {path}")
    return report


if __name__ == '__main__':
    main()
