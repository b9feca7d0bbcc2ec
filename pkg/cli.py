import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from config import CombKind, config, load_experiment_config
from view_router import ViewRouter

logger = logging.getLogger(__name__)

PARAMETER_TYPES = {"string": str, "integer": int}


def build_parser(router: ViewRouter) -> argparse.ArgumentParser:
    """Подкоманды и их флаги строятся из get_parameters() каждого view"""
    parser = argparse.ArgumentParser(prog="comb-tries", description="Гребенчатые источники и суффиксные деревья")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON-файл конфигурации")
    common.add_argument("--comb", choices=[kind.value for kind in CombKind])
    common.add_argument("--seed", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--order", type=int, help="порядок усечения рядов")
    common.add_argument("--out", help="путь к выходному файлу")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, view in router.views.items():
        sub = subparsers.add_parser(name, parents=[common], help=view.get_description(),
                                    description=view.get_description())
        for param, info in view.get_parameters().items():
            flag = f"--{param}"
            required = info.get("required", False)
            if info["type"] == "list":
                sub.add_argument(flag, dest=param, type=int, nargs="+", required=required,
                                 help=info.get("description"))
            else:
                sub.add_argument(flag, dest=param, type=PARAMETER_TYPES[info["type"]], required=required,
                                 help=info.get("description"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
    )
    router = ViewRouter()
    args = build_parser(router).parse_args(argv)
    view = router.get_view(args.command)

    overrides: Dict[str, Any] = {flag: getattr(args, flag) for flag in ("comb", "seed", "runs", "order", "out")}
    parameters = {param: getattr(args, param) for param in view.get_parameters()}
    parameters = {key: value for key, value in parameters.items() if value is not None}

    logger.info(f"comb-tries {args.command} is starting...")
    try:
        experiment = load_experiment_config(args.config, overrides)
        result = router.execute_view(args.command, {"experiment": experiment, **parameters})
    except (ValueError, RuntimeError, ArithmeticError) as e:
        logger.error(f"Command {args.command} failed: {e}")
        print(f"Ошибка: {e}", file=sys.stderr)
        return 2

    print(router.render_view(args.command, result))
    status = 0 if view.succeeded(result) else 1
    logger.info(f"comb-tries {args.command} finished with status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
