import json
import logging
import os
from abc import abstractmethod
from collections import OrderedDict
from dataclasses import replace

from torch.utils.tensorboard import SummaryWriter

import device
import options
import outputs
import utils
from errors import ConfigError, NonConvergence
from meters import StopwatchMeter, TimeMeter

# options that change how a run executes, not what it computes
_VOLATILE = ("out_dir", "threads", "verbose", "tensorboard", "pump_cache", "no_svg", "config")


class ExperimentRunner:
    """
    One subcommand. Subclasses fill in `prepare` (resolve command-specific
    defaults into args) and `execute` (compute and write the outputs through
    write_csv / write_json / save_svg so the manifest sees them).
    """
    command = None

    def __init__(self, args):
        self.args = args

        violations = options.check_args(args)
        if violations:
            raise ConfigError(violations)
        self.load_line(args)
        self.create_meters()
        self.create_output_path(args)
        self.summary_writer = SummaryWriter(os.path.join(self.out_dir, "tb")) if args.tensorboard else None

    def load_line(self, args):
        spec = device.load_line_spec(args.line)
        if args.ports is not None:
            spec = replace(spec, ports=args.ports)
        if args.n_cells is not None:
            spec = replace(spec, n_cells=args.n_cells)
        if args.disorder is not None:
            spec = replace(spec, disorder=args.disorder)
        if args.no_defects:
            spec = replace(spec, defects=())
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        self.spec = device.validate(spec)
        args.seed = self.spec.seed
        self.cell = self.spec.cell
        logging.info(f"line: {self.spec.n_cells} cells, defects {list(self.spec.defects)}, "
                     f"disorder {self.spec.disorder}, seed {self.spec.seed}, ports {self.spec.ports}")

    def create_meters(self):
        meters = OrderedDict()
        meters['solve'] = StopwatchMeter()
        meters['points'] = TimeMeter()
        self.meters = meters

    def create_output_path(self, args):
        self.out_dir = utils.ensure_dir(args.out_dir)

    def effective_config(self):
        config = {k: v for k, v in sorted(self.args.__dict__.items()) if k not in _VOLATILE}
        config["line"] = device.to_document(self.spec)
        return config

    def dump_params(self):
        path = os.path.join(self.out_dir, "params.json")
        with open(path, "w") as f:
            f.write(json.dumps(self.args.__dict__, indent=4, sort_keys=True, default=utils.json_default))
        self.manifest.record(path)

    @abstractmethod
    def prepare(self, args):
        raise NotImplementedError()

    @abstractmethod
    def execute(self):
        raise NotImplementedError()

    def run(self):
        """Exit status of the run; failures propagate after the manifest is written."""
        self.prepare(self.args)
        self.manifest = outputs.RunManifest(command=self.label(), config_hash=utils.config_hash(self.effective_config()),
                                            seed=self.spec.seed, started=outputs.timestamp())
        self.dump_params()
        self.meters['points'].reset()
        try:
            with self.meters['solve']:
                self.execute()
        except NonConvergence:
            self.manifest.partial = True
            raise
        finally:
            self.manifest.write(self.out_dir)
            if self.summary_writer is not None:
                self.summary_writer.add_scalar("time/solve_s", self.meters['solve'].sum, 0)
                self.summary_writer.close()
        logging.info(f"{self.label()} done in {self.meters['solve'].sum:.2f} s, "
                     f"{self.meters['points'].n} rows ({self.meters['points'].avg:.1f}/s), "
                     f"{len(self.manifest.outputs)} files in {self.out_dir}")
        return 0

    def label(self):
        return self.command if self.args.target is None else f"{self.command} {self.args.target}"

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def write_csv(self, name, header, rows):
        self.manifest.record(outputs.write_csv(self.path(name), header, rows))
        self.meters['points'].update(len(rows))

    def write_json(self, name, obj):
        self.manifest.record(outputs.write_json(self.path(name), obj))

    def record(self, name):
        self.manifest.record(self.path(name))

    def save_svg(self, name, draw, **kwargs):
        if self.args.no_svg:
            return
        if outputs.save_svg(self.path(name), draw, **kwargs) is not None:
            self.record(name)

    def flag_missing(self, points):
        if points:
            self.manifest.partial = True
            self.manifest.missing_points.extend(points)
            logging.warning(f"{len(points)} grid points missing, manifest flagged partial")

    def write_summary(self, scores, step):
        if self.summary_writer is None:
            return
        for var, val in scores.items():
            self.summary_writer.add_scalar(var, val, step)
