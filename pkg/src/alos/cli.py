"""Command-line front door: create, interact, simulate, export, analyze.

Exit codes are a stable contract: 0 success, 1 domain error, 2 usage
error. The mock backend is the default, so every command is hermetic and
deterministic given --seed; live mode needs an API key in the environment
(ALO_API_KEY or OPENAI_API_KEY). Every chat round trip is appended to
<out>/transcripts.jsonl for auditability.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import click

from . import codegen, parser, prompts, sim, variability
from .canned import DEFAULT_POSITIONS
from .errors import AloError, ParseError, ValidationFailedError
from .gateway import DEFAULT_TEMPERATURE, LiveBackend, MockBackend, chat_request
from .model import ALO
from .registry import Registry, load, registry_put, save

RELOAD_ATTEMPTS = 3  # bounded re-ask loop when a response fails to parse


@dataclass
class CliConfig:
    backend_name: str
    seed: int
    registry_root: Path
    out_dir: Path
    out_is_default: bool


def _make_backend(cfg: CliConfig):
    if cfg.backend_name == "live":
        if not (os.environ.get("ALO_API_KEY") or os.environ.get("OPENAI_API_KEY")):
            raise AloError("live backend needs ALO_API_KEY or OPENAI_API_KEY set")
        return LiveBackend()
    return MockBackend()


def _load_registry(cfg: CliConfig) -> Registry:
    reg, problems = load(cfg.registry_root)
    for p in problems:
        click.echo(f"warning: {p.kind} in {p.file}: {p.detail}", err=True)
    return reg


def _log_transcript(cfg: CliConfig, command: str, system: Optional[str],
                    user: str, response: str, temperature: float) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "command": command,
        "backend": cfg.backend_name,
        "seed": cfg.seed,
        "temperature": temperature,
        "system": system,
        "user": user,
        "response": response,
    }
    with (cfg.out_dir / "transcripts.jsonl").open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _ask_for_alo(cfg: CliConfig, backend, command: str, user: str,
                 temperature: float) -> ALO:
    """Complete + repair + parse, re-asking up to the bounded attempt count."""
    system = prompts.system_prompt("markdown")
    last: Exception = AloError("no attempts made")
    for attempt in range(RELOAD_ATTEMPTS):
        req = chat_request(system, user, temperature=temperature,
                           seed=cfg.seed + attempt)
        completion = backend.complete(req)
        _log_transcript(cfg, command, system, user, completion.content, temperature)
        try:
            return parser.parse_llm_response(completion.content)
        except (ParseError, ValidationFailedError) as e:
            last = e
    raise AloError(f"response unusable after {RELOAD_ATTEMPTS} attempts: {last}")


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AloError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(1)
    return wrapper


@click.group()
@click.option("--backend", type=click.Choice(["mock", "live"]), default="mock",
              show_default=True, help="Chat/embedding backend.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the mock backend and world RNG.")
@click.option("--registry", "registry_root", type=click.Path(path_type=Path),
              default=Path("registry"), show_default=True,
              help="Directory holding .alo.md / .alo.json entries.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path),
              default=Path("runs"), show_default=True,
              help="Directory for transcripts, traces, bundles, analyses.")
@click.option("--config", "config_file", type=click.Path(path_type=Path),
              default=None, help="JSON file with defaults for the flags above.")
@click.pass_context
def main(ctx, backend, seed, registry_root, out_dir, config_file):
    """Abstract Language Objects: create, interact, simulate, export, analyze."""
    default = click.core.ParameterSource.DEFAULT
    out_is_default = ctx.get_parameter_source("out_dir") == default
    if config_file is not None:
        try:
            defaults = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise click.UsageError(f"cannot read config {config_file}: {e}")
        if ctx.get_parameter_source("backend") == default:
            backend = defaults.get("backend", backend)
        if ctx.get_parameter_source("seed") == default:
            seed = int(defaults.get("seed", seed))
        if ctx.get_parameter_source("registry_root") == default:
            registry_root = Path(defaults.get("registry", registry_root))
        if out_is_default and "out" in defaults:
            out_dir = Path(defaults["out"])
            out_is_default = False
    ctx.obj = CliConfig(backend_name=backend, seed=seed,
                        registry_root=registry_root, out_dir=out_dir,
                        out_is_default=out_is_default)


def _require_name(name: str) -> str:
    if not name.strip():
        raise click.UsageError("NAME must be non-empty")
    return name.strip()


@main.command()
@click.argument("name")
@click.option("--temperature", type=float, default=DEFAULT_TEMPERATURE,
              show_default=True)
@click.option("--force", is_flag=True, help="Overwrite an existing entry.")
@click.pass_obj
@_domain_errors
def create(cfg: CliConfig, name: str, temperature: float, force: bool):
    """Ask the backend to create one ALO and store it in the registry."""
    name = _require_name(name)
    backend = _make_backend(cfg)
    reg = _load_registry(cfg)
    user = prompts.creation_prompt(name)
    alo = _ask_for_alo(cfg, backend, "create", user, temperature)
    if alo.name in reg and not force:
        raise AloError(f"{alo.name!r} already registered; pass --force to overwrite")
    if alo.name != name:
        click.echo(f"note: backend answered with {alo.name!r}", err=True)
    registry_put(reg, alo)
    save(reg)
    click.echo(parser.serialize(alo), nl=False)
    click.echo(f"stored {alo.name!r} in {cfg.registry_root}", err=True)


@main.command()
@click.argument("a")
@click.argument("b")
@click.option("--context", default=None, help="Optional shared-context clause.")
@click.option("--temperature", type=float, default=DEFAULT_TEMPERATURE,
              show_default=True)
@click.option("--force", is_flag=True)
@click.pass_obj
@_domain_errors
def interact(cfg: CliConfig, a: str, b: str, context: Optional[str],
             temperature: float, force: bool):
    """Create the '<a> meets <b>' pair ALO and a ready-to-run scenario."""
    a, b = _require_name(a), _require_name(b)
    backend = _make_backend(cfg)
    reg = _load_registry(cfg)
    user = prompts.interaction_prompt(reg, a, b, context)
    pair = _ask_for_alo(cfg, backend, "interact", user, temperature)
    if pair.name in reg and not force:
        raise AloError(f"{pair.name!r} already registered; pass --force to overwrite")
    registry_put(reg, pair)
    save(reg)
    rule = sim.interaction_rule_from_pair(pair)
    scenario = sim.Scenario(
        entities=(sim.ScenarioEntity(a, DEFAULT_POSITIONS[0]),
                  sim.ScenarioEntity(b, DEFAULT_POSITIONS[1])),
        rules=(rule,),
        seed=cfg.seed,
    )
    scenario_dir = cfg.out_dir / "scenarios"
    scenario_dir.mkdir(parents=True, exist_ok=True)
    slug = pair.name.replace(" ", "-")
    path = scenario_dir / f"{slug}.scenario.json"
    path.write_text(json.dumps(sim.scenario_to_dict(scenario), indent=2,
                               sort_keys=True) + "\n", encoding="utf-8")
    click.echo(parser.serialize(pair), nl=False)
    click.echo(f"stored {pair.name!r}; scenario written to {path}", err=True)


def _read_scenario(path: Path) -> sim.Scenario:
    try:
        return sim.scenario_from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError) as e:
        raise AloError(f"cannot read scenario {path}: {e}") from e


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, path_type=Path))
@click.option("--ticks", type=int, default=300, show_default=True)
@click.pass_obj
@_domain_errors
def simulate(cfg: CliConfig, scenario_file: Path, ticks: int):
    """Run a scenario for N ticks and export its trace."""
    if ticks < 0:
        raise click.UsageError("--ticks must be >= 0")
    reg = _load_registry(cfg)
    scenario = _read_scenario(scenario_file)
    world = sim.build_world(scenario, reg)
    trace = sim.run(world, ticks, scenario.dt)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = cfg.out_dir / "trace.jsonl"
    snap_path = cfg.out_dir / "snapshots.jsonl"
    trace_path.write_text(sim.steps_jsonl(trace), encoding="utf-8")
    snap_path.write_text(sim.snapshots_jsonl(trace), encoding="utf-8")
    click.echo(f"{len(trace.steps)} step records -> {trace_path}")
    click.echo(f"{len(trace.snapshots)} snapshots -> {snap_path}")


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, path_type=Path))
@click.pass_obj
@_domain_errors
def export(cfg: CliConfig, scenario_file: Path):
    """Emit the scene bundle and per-ALO update scripts for the harness."""
    reg = _load_registry(cfg)
    scenario = _read_scenario(scenario_file)
    bundle = codegen.emit_scene(reg, scenario)
    problems = codegen.check_bundle(bundle)
    if problems:
        raise AloError("emitted bundle failed its own schema: " + "; ".join(problems))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    bundle_path = cfg.out_dir / "scene.bundle.json"
    bundle_path.write_text(codegen.bundle_json(bundle), encoding="utf-8")
    click.echo(f"bundle -> {bundle_path}")
    for name in sorted({e.alo for e in scenario.entities}):
        alo = reg.entries[name]
        script_path = cfg.out_dir / f"{name}.update.harness.txt"
        script_path.write_text(codegen.emit_update_script(alo), encoding="utf-8")
        click.echo(f"update script -> {script_path}")


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON run config; overrides the flags below.")
@click.option("--prompt", default="Define banana in 300 words.", show_default=True)
@click.option("--system", "system_variant",
              type=click.Choice(["markdown", "codegen"]), default=None)
@click.option("--n", type=int, default=variability.DEFAULT_N, show_default=True)
@click.option("--temps", default="0.0,0.7,2.0", show_default=True,
              help="Comma-separated sweep temperatures.")
@click.option("--temp", "single_temp", type=float, default=None,
              help="Single-temperature run (0.7 is the usual default).")
@click.pass_obj
@_domain_errors
def analyze(cfg: CliConfig, config_file: Optional[Path], prompt: str,
            system_variant: Optional[str], n: int, temps: str,
            single_temp: Optional[float]):
    """Run the variability pipeline: trials, matrices, CSVs, heatmaps."""
    if config_file is not None:
        try:
            config = variability.AnalysisConfig.from_dict(
                json.loads(config_file.read_text(encoding="utf-8")))
        except (ValueError, KeyError) as e:
            raise AloError(f"bad run config {config_file}: {e}") from e
        config = variability.AnalysisConfig(
            user_prompt=config.user_prompt,
            system_prompt_variant=config.system_prompt_variant,
            n=config.n, temperatures=config.temperatures,
            backend=config.backend or cfg.backend_name, seed=config.seed)
    else:
        temperatures = ((single_temp,) if single_temp is not None else
                        tuple(float(t) for t in temps.split(",") if t.strip()))
        config = variability.AnalysisConfig(
            user_prompt=prompt, system_prompt_variant=system_variant, n=n,
            temperatures=temperatures, backend=cfg.backend_name, seed=cfg.seed)
    if config.n < 2:
        raise click.UsageError("--n must be >= 2")
    backend = _make_backend(CliConfig(config.backend, config.seed,
                                      cfg.registry_root, cfg.out_dir,
                                      cfg.out_is_default))
    out = cfg.out_dir
    if cfg.out_is_default:
        from datetime import datetime, timezone
        out = out / datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    system = (prompts.system_prompt(config.system_prompt_variant)
              if config.system_prompt_variant else None)
    report = variability.run_analysis(backend, config, out, system_prompt=system)
    for row in report["results"]:
        click.echo(f"temperature {row['temperature']:.1f}: "
                   f"mean {row['mean']:.6f} sd {row['sd']:.6f} "
                   f"over {row['count']} pairs")
    click.echo(f"outputs -> {out}")


@main.command("image-prompt")
@click.argument("name")
@click.option("--suffix", default=prompts.DEFAULT_IMAGE_SUFFIX, show_default=True)
@click.pass_obj
@_domain_errors
def image_prompt_cmd(cfg: CliConfig, name: str, suffix: str):
    """Print the flattened image prompt and the visual/performance coverage."""
    name = _require_name(name)
    reg = _load_registry(cfg)
    from .registry import registry_get
    alo = registry_get(reg, name)
    click.echo(prompts.image_prompt(alo, suffix))
    report = prompts.classify_parameters(alo)
    counts = {"visual": 0, "performance": 0, "other": 0}
    for cls in report.classes.values():
        counts[cls.label] += 1
    if report.visual_coverage is None:
        click.echo("visual coverage: undefined (no parameters)", err=True)
    else:
        click.echo(
            f"visual coverage: {report.visual_coverage:.2f} "
            f"({counts['visual']} visual, {counts['performance']} performance, "
            f"{counts['other']} other)", err=True)


@main.command()
@click.pass_obj
@_domain_errors
def repl(cfg: CliConfig):
    """Conversational workflow sharing one session registry."""
    backend = _make_backend(cfg)
    reg = _load_registry(cfg)
    click.echo("commands: create <name> | interact <a> / <b> | list | "
               "show <name> | image <name> | quit")
    while True:
        try:
            line = input("alo> ").strip()
        except EOFError:
            break
        if not line:
            continue
        cmd, _, rest = line.partition(" ")
        try:
            if cmd in ("quit", "exit"):
                break
            elif cmd == "list":
                for n in reg.names():
                    click.echo(n)
            elif cmd == "show":
                from .registry import registry_get
                click.echo(parser.serialize(registry_get(reg, rest.strip())), nl=False)
            elif cmd == "image":
                from .registry import registry_get
                click.echo(prompts.image_prompt(registry_get(reg, rest.strip())))
            elif cmd == "create":
                name = rest.strip()
                if not name:
                    click.echo("usage: create <name>", err=True)
                    continue
                alo = _ask_for_alo(cfg, backend, "repl-create",
                                   prompts.creation_prompt(name), DEFAULT_TEMPERATURE)
                registry_put(reg, alo)
                save(reg)
                click.echo(f"created {alo.name!r}")
            elif cmd == "interact":
                a, sep, b = rest.partition("/")
                a, b = a.strip(), b.strip()
                if not (sep and a and b):
                    click.echo("usage: interact <a> / <b>", err=True)
                    continue
                user = prompts.interaction_prompt(reg, a, b)
                pair = _ask_for_alo(cfg, backend, "repl-interact", user,
                                    DEFAULT_TEMPERATURE)
                registry_put(reg, pair)
                save(reg)
                click.echo(f"created {pair.name!r}")
            else:
                click.echo(f"unknown command {cmd!r}", err=True)
        except AloError as e:
            click.echo(f"error: {e}", err=True)


if __name__ == "__main__":
    main()
