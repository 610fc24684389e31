#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Energy Harvesting Capacity - Main Entry Point
Command-line runner for capacity sweeps, truncated Gaussian convergence,
greedy comparisons and strategy-letter bounds.
"""

import argparse
import logging
import sys

from ehcap.config_manager import ConfigManager
from ehcap.constants import (
    APP_NAME, APP_VERSION, EXIT_BAD_CONFIG, LOG_FORMAT, LOG_LEVEL,
    OUTPUT_FORMATS, SUPPORTED_EXPERIMENTS
)
from ehcap.errors import ConfigError, EhcapError
from ehcap.experiments import ExperimentRunner, exit_code_for
from ehcap.reporting import write_results


def setup_logging(level=LOG_LEVEL):
    """Configure application logging on stderr so results on stdout stay clean"""
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )
    return logging.getLogger(APP_NAME)


def build_parser():
    """Command-line flags; every unset flag leaves the configuration value alone"""
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Capacity and achievable rates of an energy harvesting AWGN channel")
    parser.add_argument('--version', action='version', version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument('--experiment', choices=SUPPORTED_EXPERIMENTS)
    parser.add_argument('--config', help="key = value configuration file")
    parser.add_argument('--gamma', type=float, help="buffer capacity in energy units")
    parser.add_argument('--quantum', type=float, help="energy per quantum (0 = chosen from gamma and ymax)")
    parser.add_argument('--ymax', type=float, help="maximum harvest in energy units")
    parser.add_argument('--ymax-list', help="comma-separated maximum harvests for sweeps")
    parser.add_argument('--harvest', help="point | uniform | uniform-continuous | poisson | pmf:<path>")
    parser.add_argument('--harvest-mean', type=float, help="mean harvest for poisson")
    parser.add_argument('--sigma2', type=float, help="noise variance")
    parser.add_argument('--epsilon', type=float, help="truncated Gaussian power backoff (0 = 5%% of E[Y])")
    parser.add_argument('--seed', dest='seeds', help="seed or comma-separated seed list")
    parser.add_argument('--restarts', type=int)
    parser.add_argument('--sweeps', type=int)
    parser.add_argument('--samples', type=int)
    parser.add_argument('--burn-in', type=int)
    parser.add_argument('--replicas', type=int)
    parser.add_argument('--gammas', help="comma-separated ascending buffer sizes")
    parser.add_argument('--m-list', help="comma-separated strategy orders")
    parser.add_argument('--workers', type=int)
    parser.add_argument('--oracle-gamma', type=float, help="buffer size of the exhaustive-oracle companion row")
    parser.add_argument('--tg-compare', action='store_true', default=None,
                        help="add truncated Gaussian rates to capacity sweeps")
    parser.add_argument('--out', help="output path, stdout when omitted")
    parser.add_argument('--format', choices=OUTPUT_FORMATS)
    parser.add_argument('--save-config', metavar='PATH', help="write the merged configuration")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true')
    verbosity.add_argument('--quiet', action='store_true')
    return parser


def overrides_from(args):
    keys = ['experiment', 'gamma', 'quantum', 'ymax', 'ymax_list', 'harvest', 'harvest_mean',
            'sigma2', 'epsilon', 'seeds', 'restarts', 'sweeps', 'samples', 'burn_in', 'replicas',
            'gammas', 'm_list', 'workers', 'oracle_gamma', 'tg_compare', 'out', 'format']
    return {key: getattr(args, key) for key in keys}


def main(argv=None):
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else LOG_LEVEL
    logger = setup_logging(level)
    logger.info(f"Starting {APP_NAME} {APP_VERSION}")

    # Load configuration: defaults, then file, then flags
    config_manager = ConfigManager(args.config)
    try:
        config_manager.load_config()
        config_manager.update(overrides_from(args))
        config_manager.validate()
        if args.save_config:
            config_manager.save_config(args.save_config)
    except ConfigError as e:
        logger.error(f"Bad configuration: {e}")
        return EXIT_BAD_CONFIG

    runner = ExperimentRunner(config_manager)
    try:
        result = runner.run()
    except EhcapError as e:
        logger.error(f"Experiment failed: {e}")
        return exit_code_for([e])

    write_results(result.rows, result.columns, config_manager['seeds'], config_manager.config_hash(),
                  fmt=config_manager['format'], out=config_manager['out'])
    logger.info(f"Shutting down {APP_NAME} with exit code {result.exit_code}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
