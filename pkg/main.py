#!/usr/bin/env python3
"""
Main entry point for the spin-boson GQME kernel engine.

Exposes every pipeline stage as a subcommand: propagate, pfi, kernel,
gqme, memtime, compare, and pipeline (all stages in one run).
"""

import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

from gqme import (
    GqmeIntegrationError,
    GqmeType,
    MemoryTimeSearchError,
    PfiError,
    VolterraError,
    VolterraScheme,
)
from pipeline import (
    ComparisonFailedError,
    FingerprintMismatchError,
    MalformedSeriesFileError,
    PipelineError,
    RuntimeSettings,
    cmd_compare,
    cmd_gqme,
    cmd_kernel,
    cmd_memtime,
    cmd_pfi,
    cmd_propagate,
    run_pipeline,
)
from spin_boson import ConfigError, ModelError
from tensor_train import KslIntegrationError, TensorTrainError
from tfd import DenseLimitError, PropagationError, union_of_states

NUMERICAL_ERRORS = (
    TensorTrainError,
    KslIntegrationError,
    PropagationError,
    PfiError,
    VolterraError,
    GqmeIntegrationError,
    MemoryTimeSearchError,
)


def print_summary(title, records):
    """Print the artifacts written by a command.

    Args:
        title: Banner title
        records: StageRecord list
    """
    print("\n" + "="*60)
    print(title)
    print("="*60)

    for record in records:
        print(f"\n{record.stage}: {record.output}")
        print(f"  Fingerprint: {record.fingerprint[:16]}")
        if record.input_fingerprint:
            print(f"  Input: {record.input_fingerprint[:16]}")
        print(f"  Wall Time: {record.wall_time:.2f}s")
        for key, value in record.details.items():
            if key == "candidates":
                print(f"  Candidates: {len(value)}")
                for candidate in value[:10]:
                    status_icon = "✅" if candidate["converged"] else "❌"
                    print(f"    {status_icon} t_mem = {candidate['memory_time']:.5f}  deviation {candidate['deviation']:.3e}")
            elif isinstance(value, float):
                print(f"  {key}: {value:.6g}")
            else:
                print(f"  {key}: {value}")

    print("\n" + "="*60)


def print_manifest(manifest):
    print_summary("PIPELINE SUMMARY", manifest.stages)
    print(f"\nModel Fingerprint: {manifest.model_fingerprint[:16]}")
    if manifest.kernel_iterations:
        print("Volterra Iterations:")
        for name, count in manifest.kernel_iterations.items():
            print(f"  {name}: {count}")
    if manifest.comparisons:
        print("sigma_z vs direct dynamics:")
        for name, metric in manifest.comparisons.items():
            status_icon = "✅" if metric < 1e-3 else "⚠️ "
            print(f"  {status_icon} {name}: {metric:.3e}")


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser(settings):
    parser = CliParser(
        description="Spin-boson GQME engine - exact memory kernels from tensor-train thermo-field dynamics",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
            Examples:
            # Whole pipeline for the desk-scale Model 1 configuration
            python main.py pipeline --config configs/model1_desk.yaml --out runs/model1

            # Dense U-series for two modes, then PFIs and the Full kernel
            python main.py propagate --config configs/model1.yaml --backend dense --set n_modes=2 --out u.dat
            python main.py pfi u.dat --out pfi.dat
            python main.py kernel pfi.dat --type Full --out kernel_Full.dat

            # Acceptor GQME (reads kernel_AcceptorOnly.inhom.dat next to the kernel)
            python main.py gqme kernel_AcceptorOnly.dat --out result_AcceptorOnly.dat

            # Memory-time search and comparison against the Rabi closed form
            python main.py memtime kernel_Full.dat --conv-param 5e-4 --out result_Full.dat
            python main.py compare result_Full.dat --reference rabi --tolerance 1e-6
        """
    )
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable debug logging')
    commands = parser.add_subparsers(dest='command', required=True)

    def add_model_flags(sub):
        sub.add_argument('--config', type=str, required=True, help='YAML configuration file')
        sub.add_argument('--backend', choices=['tt', 'dense'], default=None, help='Dynamics backend override')
        sub.add_argument('--rank', type=int, default=None, help='TT manifold rank override')
        sub.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                         help='Override a configuration key (repeatable)')
        sub.add_argument('--jobs', type=int, default=settings.jobs,
                         help=f'Concurrent trajectories and solves (default: {settings.jobs})')

    sub = commands.add_parser('propagate', help='Compute the U-series')
    add_model_flags(sub)
    sub.add_argument('--type', dest='types', action='append', default=None,
                     help='Only propagate the initial states these GQME types need (repeatable)')
    sub.add_argument('--out', type=str, required=True, help='Output U-series file')

    sub = commands.add_parser('pfi', help='Differentiate a U-series into PFIs')
    sub.add_argument('input', type=str, help='U-series file')
    sub.add_argument('--out', type=str, required=True, help='Output PFI file')

    sub = commands.add_parser('kernel', help='Solve the memory kernel of one GQME type')
    sub.add_argument('input', type=str, help='PFI file')
    sub.add_argument('--type', required=True, help='Full, PopulationsOnly, DonorOnly or AcceptorOnly')
    sub.add_argument('--out', type=str, required=True, help='Output kernel file')
    sub.add_argument('--tol', type=float, default=1e-10, help='Volterra tolerance (default: 1e-10)')
    sub.add_argument('--max-iter', type=int, default=50, help='Volterra iteration cap (default: 50)')
    sub.add_argument('--scheme', choices=[s.value for s in VolterraScheme], default=VolterraScheme.MARCHING.value,
                     help='Volterra iteration scheme (default: marching)')
    sub.add_argument('--t-mem', type=float, default=None, help='Kernel range (default: whole PFI grid)')

    sub = commands.add_parser('gqme', help='Propagate the GQME of a kernel file')
    sub.add_argument('input', type=str, help='Kernel file')
    sub.add_argument('--out', type=str, required=True, help='Output result file')
    sub.add_argument('--inhom', type=str, default=None, help='Inhomogeneous-term file (default: next to the kernel)')
    sub.add_argument('--t-mem', type=float, default=None, help='Memory time (default: whole kernel grid)')
    sub.add_argument('--t-final', type=float, default=None, help='Final time (default: end of the kernel grid)')

    sub = commands.add_parser('memtime', help='Search the converged memory time')
    sub.add_argument('input', type=str, help='Kernel file')
    sub.add_argument('--out', type=str, required=True, help='Output result file at the converged memory time')
    sub.add_argument('--inhom', type=str, default=None, help='Inhomogeneous-term file (default: next to the kernel)')
    sub.add_argument('--conv-param', type=float, default=5e-4, help='Convergence parameter (default: 5e-4)')
    sub.add_argument('--t-mem', type=float, default=None, help='Longest memory time (default: whole kernel grid)')
    sub.add_argument('--t-final', type=float, default=None, help='Final time (default: end of the kernel grid)')
    sub.add_argument('--stride', type=float, default=0.25, help='Coarse scan stride (default: 0.25)')
    sub.add_argument('--jobs', type=int, default=settings.jobs, help='Candidates run concurrently')

    sub = commands.add_parser('compare', help='Compare sigma_z of two results or against a reference')
    sub.add_argument('input', type=str, help='Result file')
    sub.add_argument('other', type=str, nargs='?', default=None, help='Second result file')
    sub.add_argument('--reference', choices=['rabi'], default=None, help='Closed-form reference instead of a file')
    sub.add_argument('--tolerance', type=float, default=1e-3, help='Allowed sup-norm difference (default: 1e-3)')

    sub = commands.add_parser('pipeline', help='Run all stages for one configuration')
    add_model_flags(sub)
    sub.add_argument('--type', dest='types', action='append', default=None,
                     help='GQME types to run (repeatable, default: all four)')
    sub.add_argument('--out', type=str, required=True, help='Output directory')
    sub.add_argument('--memtime', action='store_true', help='Search the memory time of every type')

    return parser


def run_command(args):
    """Dispatch a parsed command; returns the process exit code."""
    if args.command == 'propagate':
        states = union_of_states(args.types) if args.types else None
        record = cmd_propagate(
            args.config, args.out, backend=args.backend, rank=args.rank,
            overrides=args.overrides, states=states, jobs=args.jobs,
        )
        print_summary("PROPAGATION SUMMARY", [record])

    elif args.command == 'pfi':
        print_summary("PFI SUMMARY", [cmd_pfi(args.input, args.out)])

    elif args.command == 'kernel':
        records = cmd_kernel(
            args.input, args.types[0], args.out, tol=args.tol, max_iter=args.max_iter,
            scheme=args.scheme, tau_max=args.t_mem,
        )
        print_summary("KERNEL SUMMARY", records)

    elif args.command == 'gqme':
        record = cmd_gqme(args.input, args.out, inhom_path=args.inhom, t_final=args.t_final, memory_time=args.t_mem)
        print_summary("GQME SUMMARY", [record])

    elif args.command == 'memtime':
        record = cmd_memtime(
            args.input, args.out, inhom_path=args.inhom, conv_param=args.conv_param,
            t_mem_max=args.t_mem, t_final=args.t_final, stride=args.stride, jobs=args.jobs,
        )
        print_summary("MEMORY TIME SUMMARY", [record])

    elif args.command == 'compare':
        if args.other is None and args.reference is None:
            print("Error: compare needs a second result file or --reference")
            return 1
        metric = cmd_compare(args.input, args.other, reference=args.reference, tolerance=args.tolerance)
        print(f"\n✅ sigma_z sup-norm difference: {metric:.6e} (tolerance {args.tolerance:.3e})")

    elif args.command == 'pipeline':
        manifest = run_pipeline(
            args.config, args.out, gqme_types=args.types, backend=args.backend, rank=args.rank,
            overrides=args.overrides, jobs=args.jobs, memtime=args.memtime,
        )
        print_manifest(manifest)
        print(f"\nManifest saved to: {Path(args.out) / 'manifest.json'}")

    return 0


def main(argv=None):
    # Load environment variables from .env file
    load_dotenv()

    try:
        settings = RuntimeSettings.from_env()
    except ConfigError as e:
        print(f"\n❌ Configuration Error: {e}")
        sys.exit(1)

    parser = build_parser(settings)
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # Reject unknown --type values as usage errors before any work starts
    names = list(getattr(args, 'types', None) or [])
    if args.command == 'kernel':
        names.append(args.type)
    try:
        args.types = [GqmeType.parse(name) for name in names] or None
    except ValueError as e:
        parser.error(str(e))

    try:
        code = run_command(args)
        if code == 0 and args.command != 'compare':
            print(f"\n✅ {args.command} completed successfully!")
        sys.exit(code)

    except ComparisonFailedError as e:
        print(f"\n❌ Comparison Failed: {e}")
        sys.exit(3)

    except (ConfigError, ModelError) as e:
        print(f"\n❌ Configuration Error: {e}")
        print("\nPlease check:")
        print("  1. Every required key is present (epsilon, gamma, beta, xi, omega_c, omega_max, n_modes, dt, t_final, n_fock)")
        print("  2. Values are in range (beta, omega_c, dt > 0; n_fock >= 2)")
        print("  3. --set overrides look like KEY=VALUE")
        sys.exit(1)

    except DenseLimitError as e:
        print(f"\n❌ Dense Limit Exceeded: {e}")
        print("\nPlease either:")
        print("  1. Use the TT backend: --backend tt")
        print("  2. Reduce n_modes or n_fock with --set")
        print("  3. Raise the limit: --set dense_limit=N or GQME_DENSE_LIMIT=N")
        sys.exit(1)

    except FingerprintMismatchError as e:
        print(f"\n❌ Artifact Mismatch: {e}")
        print("\nPlease check that all input files come from the same model and run.")
        sys.exit(1)

    except MalformedSeriesFileError as e:
        print(f"\n❌ Malformed File: {e}")
        print("\nPlease regenerate the file with the matching subcommand.")
        sys.exit(1)

    except FileNotFoundError as e:
        print(f"\n❌ File Not Found: {e}")
        sys.exit(1)

    except NUMERICAL_ERRORS as e:
        print(f"\n❌ Numerical Failure: {e}")
        print("\nPlease check:")
        print("  1. The TT rank is large enough (--rank)")
        print("  2. The time step resolves the dynamics (--set dt=...)")
        print("  3. The Volterra tolerance and iteration cap (--tol, --max-iter)")
        sys.exit(2)

    except PipelineError as e:
        print(f"\n❌ Pipeline Error: {e}")
        sys.exit(1)

    except KeyboardInterrupt:
        print("\n\n⚠️  Interrupted by user")
        sys.exit(130)

    except Exception as e:
        print(f"\n❌ Unexpected Error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == '__main__':
    main()
