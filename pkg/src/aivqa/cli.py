"""Command-line client.

Every subcommand builds the same request model the HTTP API accepts, then
either calls the handler in-process (default) or POSTs it to a running
service (--server URL).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import parse_override
from .errors import EXIT_FAILURE, EXIT_OK, VideoQAError
from .service import handlers
from .service.schemas import (
    CaptionSimRequest,
    EnsembleMember,
    EnsembleRequest,
    EvaluateRequest,
    PredictRequest,
    TrainRequest,
)


def _add_server(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--server", default=None, metavar="URL",
        help="POST to a running service instead of running in-process",
    )


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="dotted-key config override, e.g. --set schedule.finetune_epochs=5",
    )


def _overrides(args) -> dict:
    return dict(parse_override(item) for item in args.overrides)


def _dispatch(args, endpoint: str, request, handler) -> int:
    if args.server:
        import httpx

        resp = httpx.post(
            args.server.rstrip("/") + endpoint,
            json=request.model_dump(mode="json"),
            timeout=600.0,
        )
        payload = resp.json()
        if resp.status_code >= 400:
            print(json.dumps(payload, indent=2, sort_keys=True), file=sys.stderr)
            return int(payload.get("exit_code", EXIT_FAILURE))
    else:
        payload = handler(request).model_dump(mode="json")
    print(json.dumps(payload, indent=2, sort_keys=True))
    if payload.get("failures"):
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_train(args) -> int:
    req = TrainRequest(
        manifest_path=args.manifest,
        out_dir=args.out_dir,
        val_manifest_path=args.val_manifest,
        config_path=args.config,
        overrides=_overrides(args),
    )
    return _dispatch(args, "/train", req, handlers.handle_train)


def _cmd_predict(args) -> int:
    req = PredictRequest(
        checkpoint_path=args.checkpoint,
        manifest_path=args.manifest,
        out_csv=args.out,
        bundle_log=args.bundles,
        video_root=args.video_root,
    )
    return _dispatch(args, "/predict", req, handlers.handle_predict)


def _cmd_evaluate(args) -> int:
    req = EvaluateRequest(pred_csv=args.pred, target_csv=args.target)
    return _dispatch(args, "/evaluate", req, handlers.handle_evaluate)


def _parse_member(text: str) -> EnsembleMember:
    path, sep, weight = text.rpartition(":")
    if sep:
        try:
            return EnsembleMember(path=path, weight=float(weight))
        except ValueError:
            pass
    return EnsembleMember(path=text, weight=1.0)


def _cmd_ensemble(args) -> int:
    req = EnsembleRequest(
        members=[_parse_member(m) for m in args.member],
        out_csv=args.out,
        normalize=args.normalize,
        fit_targets=args.fit,
    )
    return _dispatch(args, "/ensemble", req, handlers.handle_ensemble)


def _cmd_caption_sim(args) -> int:
    req = CaptionSimRequest(
        manifest_path=args.manifest,
        out_csv=args.out,
        config_path=args.config,
        overrides=_overrides(args),
        video_root=args.video_root,
    )
    return _dispatch(args, "/caption-sim", req, handlers.handle_caption_sim)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aivqa", description="train, score, and evaluate generated-video quality models"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a training manifest")
    p.add_argument("--manifest", required=True, help="training manifest CSV")
    p.add_argument("--val-manifest", default=None, help="validation manifest CSV (default: split)")
    p.add_argument("--out-dir", required=True, help="directory for checkpoints and logs")
    _add_config(p)
    _add_server(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score a manifest with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("-o", "--out", required=True, help="predictions CSV path")
    p.add_argument("--bundles", default=None, help="per-branch score JSONL path")
    p.add_argument("--video-root", default=None)
    _add_server(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="correlation metrics of predictions vs targets")
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--target", required=True, help="target (MOS) CSV")
    _add_server(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ensemble", help="weighted combination of prediction files")
    p.add_argument(
        "--member", action="append", required=True, metavar="PATH[:WEIGHT]",
        help="prediction CSV with optional weight (repeatable)",
    )
    p.add_argument("--fit", default=None, metavar="TARGETS",
                   help="fit least-squares weights against this target CSV")
    p.add_argument("--normalize", action="store_true", help="z-score members first")
    p.add_argument("-o", "--out", required=True, help="output CSV path")
    _add_server(p)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("caption-sim", help="caption videos and score prompt similarity")
    p.add_argument("--manifest", required=True)
    p.add_argument("-o", "--out", required=True, help="similarity CSV path")
    p.add_argument("--video-root", default=None)
    _add_config(p)
    _add_server(p)
    p.set_defaults(func=_cmd_caption_sim)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VideoQAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
