import json
import logging
import sys
import warnings

import options
import outputs
import runners
from errors import ConfigError, SimulationError, TruncationWarning

logging.basicConfig(
    format='%(asctime)s %(levelname)s: %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S', level=logging.INFO)

EXIT_IO = 4


def get_runner(args):
    if args.command == "reproduce-fig":
        if args.target not in runners.FIGURES:
            raise ConfigError([("target", f"reproduce-fig needs one of {options.FIGURES}, got {args.target!r}")])
        return runners.FIGURES[args.target](args)
    elif args.command in runners.COMMANDS:
        return runners.COMMANDS[args.command](args)
    else:
        raise ValueError(f"unknown command {args.command}")


def _fail(out_dir, exc, code):
    doc = outputs.write_error(out_dir, exc)
    print(json.dumps(doc), file=sys.stderr)
    logging.error(f"{doc['error']}: {doc['message']}")
    return code


def main(argv=None):
    out_dir = None
    try:
        args, unknown = options.parse_args(argv)
        out_dir = args.out_dir
        logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)
        if len(unknown) > 0:
            logging.warning(f"unknown arguments ignored: {unknown}")
        warnings.simplefilter("always", TruncationWarning)
        logging.captureWarnings(True)
        return get_runner(args).run()
    except SimulationError as e:
        return _fail(out_dir, e, e.exit_code)
    except OSError as e:
        return _fail(out_dir, e, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
