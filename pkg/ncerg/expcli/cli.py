"""
ncerg CLI

実験設定を読み込み、サブコマンドを実行して結果表を出力するコマンドラインインターフェース
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import NoReturn

from dotenv import load_dotenv

from ncerg.errors import ConfigError, NcergError
from ncerg.logging_setup import setup_logging

from .config import SEED_LIMIT, load_config, resolve_seed
from .emit import OutputFormat, emit
from .runner import Command, ExperimentRunner, any_failed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

EPILOG = """
examples:
  ncerg certify --config config/experiments/identity_certify.toml
  ncerg prop1 --config config/experiments/pinching_prop1.toml --strict
  NCERG_SEED=7 ncerg cesaro --config config/experiments/markov_cesaro.yaml --format json
"""


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got '{text}'") from e
    if not 0 <= value < SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return value


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so run() owns the exit code"""

    def error(self, message: str) -> NoReturn:
        raise ConfigError([message])


class NcergCLI:
    """
    ncerg CLI クラス
    """

    def run(self, args: list[str]) -> int:
        """
        CLI を実行

        Args:
            args: コマンドライン引数

        Returns:
            int: 終了コード (0: 全て pass, 1: --strict で fail あり, 2: 使い方・設定エラー)
        """
        parser = self._create_parser()
        try:
            parsed_args = parser.parse_args(args)
        except ConfigError as e:
            parser.print_usage(sys.stderr)
            print(f"error: {'; '.join(e.violations)}", file=sys.stderr)
            return EXIT_USAGE

        # ログレベルを設定
        setup_logging(verbose=parsed_args.verbose, quiet=parsed_args.quiet)
        load_dotenv()

        if parsed_args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE

        try:
            # サブコマンドを実行
            return int(parsed_args.func(parsed_args))
        except ConfigError as e:
            for violation in e.violations:
                logger.error(f"Config error: {violation}")
            if e.line is not None:
                logger.error(f"  at line {e.line}, column {e.column}")
            return EXIT_USAGE
        except NcergError as e:
            logger.error(f"Error: {e}")
            return EXIT_USAGE

    def _create_parser(self) -> argparse.ArgumentParser:
        """
        コマンドライン引数パーサーを作成

        Returns:
            argparse.ArgumentParser: パーサー
        """
        parser = _Parser(
            prog="ncerg",
            description="Ergodic experiments on finite tracial matrix algebras",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=EPILOG,
        )
        parser.add_argument(
            "--verbose", "-v", action="store_true", help="Enable debug logging"
        )
        parser.add_argument(
            "--quiet", "-q", action="store_true", help="Only log warnings and errors"
        )

        # サブコマンドを作成
        subparsers = parser.add_subparsers(dest="command", help="Available commands")
        descriptions = {
            Command.CERTIFY: "Certify the configured kernel as DS+",
            Command.NORMS: "Evaluate norms, axiom suites and contraction",
            Command.CESARO: "Cesàro averages and their distance to the mean limit",
            Command.DSAE: "Projection witnesses for d.s.a.e. convergence",
            Command.PROP1: "Replicate R0 mean convergence with explicit budgets",
            Command.THEOREM: "Replicate d.s.a.e. convergence with explicit budgets",
            Command.EMBED: "Probe the embedding constants of each norm",
        }
        for command, help_text in descriptions.items():
            sub = subparsers.add_parser(command.value, help=help_text)
            self._add_common_arguments(sub)
            sub.set_defaults(func=self._cmd_experiment)

        return parser

    def _add_common_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--config", "-c", type=Path, required=True, help="Experiment config (.toml/.yaml/.json)"
        )
        parser.add_argument("--seed", type=_seed, help="Override the seed (u64)")
        parser.add_argument("--out", "-o", type=Path, help="Output file (default: stdout)")
        parser.add_argument(
            "--format",
            "-f",
            choices=[f.value for f in OutputFormat],
            default=OutputFormat.CSV.value,
            help="Output format (default: csv)",
        )
        parser.add_argument(
            "--strict", action="store_true", help="Exit with 1 when any verdict is fail"
        )
        parser.add_argument(
            "--dump", type=Path, help="Directory for intermediate operators and witnesses"
        )

    def _cmd_experiment(self, args: argparse.Namespace) -> int:
        """Load config, run one command, emit rows"""
        config = resolve_seed(load_config(args.config), cli_seed=args.seed)
        rows = ExperimentRunner(config, dump_dir=args.dump).run(args.command)
        emit(rows, args.format, args.out)

        if any_failed(rows):
            failing = sorted({row.metric for row in rows if row.verdict == "fail"})
            logger.warning(f"Failing metrics: {', '.join(failing)}")
            if args.strict:
                return EXIT_FAILED
        return EXIT_OK


def main() -> int:
    """Console entry point"""
    return NcergCLI().run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
