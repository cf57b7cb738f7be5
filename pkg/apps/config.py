"""
Configuration subsystem for the applications (simulate/fit/stability/bench/eval).

Configuration is built by merging, lowest priority first:
    Global defaults defined below.
    Domain specific defaults from domains/<domain>/__init__.py.
    Sections of a JSON file passed with --config.
    Options specified at the command line.

The flat argparse namespace is then split with levelDown into one AttrDict per concern:
synthArgs, fitArgs, stabilityArgs, benchArgs and debug.
"""
import os, sys, argparse, logging, glob, re, json, time
from importlib import import_module
from orderedattrdict import AttrDict

import mvtlasso
from mvtlasso.core.errors import ValidationError, NumericError, StageError, GenerationError
from mvtlasso.dataset import file_digest, write_json
from mvtlasso.evaluator import make_estimator
from mvtlasso.util import (str2bool, levelDown, AppMode, resolveThreads, enableProfiling, resetProfilingData,
            summarizeLabelNodes, TensorBoardHook, nullTensorBoardHook)
from mvtlasso.util.profiler import profilingData

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

LOG_FORMAT = '%(asctime)s %(name)-12s %(levelname)-8s %(message)s'

# Global AppConfig defaults:
#       Unless an app config item is overridden at the command line, in the config file or
#       at the domain level, it is picked up from here.
appConfigGlobalDefaults = {
    "runs_root": "./",
    "threads": None,
    "log_level": "info",
}

# Synthetic data generation, used by simulate and bench.
synthArgsGlobalDefaults = {
    "p": 50,
    "n": 60,
    "k": 30,
    "views": 2,
    "nu": 3.0,
    "edge_prob": 0.01,
    "sigma": 1.0,
    "seed": 0,
}

# Estimator settings, used by fit, stability and bench.
fitArgsGlobalDefaults = {
    "method": "mvtlasso",
    "lam": 0.1,
    "nu": 3.0,
    "k": "auto",
    "max_em_iter": 50,
    "em_tol": 1e-5,
    "msteps_per_iter": 1,
    "w_init": "ica",
    "penalize_diagonal": True,
    "glasso_max_iter": 200,
    "glasso_tol": 1e-5,
    "seed": 0,
}

stabilityArgsGlobalDefaults = {
    "lambdas": None,
    "replicates": 100,
    "fraction": 0.9,
    "threshold": 0.5,
    "grid_count": 15,
    "grid_ratio": 1e-2,
}

benchArgsGlobalDefaults = {
    "methods": "glasso,tlasso,mvtlasso",
    "seeds": 20,
    "first_seed": 0,
    "lambdas": None,
    "grid_count": 50,
    "grid_ratio": 1e-3,
}

# Config file sections and the defaults they may override.
configSections = {
    "app": appConfigGlobalDefaults,
    "synth": synthArgsGlobalDefaults,
    "fit": fitArgsGlobalDefaults,
    "stability": stabilityArgsGlobalDefaults,
    "bench": benchArgsGlobalDefaults,
}

# Keys of fitArgs that bench takes from the generation spec or the seed list instead.
benchSharedKeys = ["method", "lam", "nu", "seed"]

def parseFloatList(value):
    """ "0.1,0.05" -> [0.1, 0.05]; used as argparse type. """
    if value is None or isinstance(value, (list, tuple)):
        return value
    try:
        return [float(item) for item in str(value).split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("Comma separated numbers expected, got {0!r}.".format(value))

def parseRanks(value):
    """ "auto" -> "auto"; "6,6" -> (6, 6); 6 -> (6,). """
    if value is None or value == "auto":
        return "auto"
    if isinstance(value, int):
        return (value,)
    if isinstance(value, (list, tuple)):
        return tuple(int(k) for k in value)
    try:
        return tuple(int(item) for item in str(value).split(",") if item.strip())
    except ValueError:
        raise ValidationError("--k expects 'auto' or comma separated integers, got {0!r}.".format(value))

def readConfigFile(path):
    """
    Loads a JSON config document and checks its sections and keys.

    Raises:
        ValidationError: unreadable document, unknown section or unknown key.
    """
    if not os.path.isfile(path):
        raise ValidationError("Config file {0} does not exist.".format(path))
    try:
        with open(path, "r", encoding="utf-8") as fin:
            document = json.load(fin)
    except ValueError as e:
        raise ValidationError("Config file {0} is not valid JSON: {1}".format(path, e))
    if not isinstance(document, dict):
        raise ValidationError("Config file {0} must hold an object of sections.".format(path))
    for section, values in document.items():
        if section not in configSections:
            raise ValidationError("Config file {0}: unknown section {1!r}; valid sections: {2}".format(
                path, section, ", ".join(configSections)))
        if not isinstance(values, dict):
            raise ValidationError("Config file {0}: section {1!r} must be an object.".format(path, section))
        unknown = set(values) - set(configSections[section])
        if unknown:
            raise ValidationError("Config file {0}: unknown keys in {1!r}: {2}".format(
                path, section, ", ".join(sorted(unknown))))
    return document

def loadConfig(mode, argv=None):
    """
    Build the config object for one application launch.

    Returns:
        appConfig (AttrDict) with the sections needed by mode: synthArgs, fitArgs,
        stabilityArgs, benchArgs and debug.
    """
    argv = sys.argv[1:] if argv is None else list(argv)

    def __basic_arguments_parser(add_help):
        """
        Creates a command line parser with the arguments that select defaults.
        """
        parser = argparse.ArgumentParser(prog="mvtlasso " + modeName(mode), add_help=add_help)
        parser.add_argument('--domain', action='store', dest='domain', default="desk",
                            help='Benchmark preset under domains/ to take defaults from.')
        parser.add_argument('--config', action='store', dest='config', default=None,
                            help='JSON document with sections app, synth, fit, stability, bench.')
        parser.add_argument('--full_scale', type=str2bool, nargs='?', const=True, default=False,
                            help='Use the full scale preset instead of the desk scale one.')
        if mode == AppMode.Bench:
            parser.add_argument('--spec', action='store', dest='spec', default=None,
                                help='JSON document with the synth section keys at top level.')
        return parser

    basicAppConfig, _ = __basic_arguments_parser(False).parse_known_args(argv)

    # Get domain defaults and merge them.
    domainName = "full" if basicAppConfig.full_scale else basicAppConfig.domain
    try:
        domainModule = import_module("domains." + domainName)
    except ImportError:
        raise ValidationError("Unknown domain {0!r}.".format(domainName))
    defaults = AttrDict()
    for section, globalDefaults in configSections.items():
        domainDefaults = getattr(domainModule, section + "ArgsDefaults", {}) if section != "app" \
            else getattr(domainModule, "appConfigDefaults", {})
        defaults[section] = AttrDict({**globalDefaults, **domainDefaults})

    if basicAppConfig.config is not None:
        for section, values in readConfigFile(basicAppConfig.config).items():
            defaults[section].update(values)
    if mode == AppMode.Bench and basicAppConfig.spec is not None:
        defaults["synth"].update(readSpecFile(basicAppConfig.spec))

    # Create the parser which parses basic arguments and also the mode specific ones.
    parser = __basic_arguments_parser(True)
    parser.add_argument('--out', dest='out', default=None,
                        help='Output folder. A new runFolders/run.NNNNN.<mode>/ is used when omitted.')
    parser.add_argument('--runs_root', dest='runs_root', default=defaults.app.runs_root,
                        help='Parent of runFolders/ when --out is omitted.')
    parser.add_argument('--threads', type=int, default=defaults.app.threads,
                        help='Worker count. Defaults to MVTLASSO_THREADS, else all logical cores.')

    # Various logging and debug settings.
    parser.add_argument('--log_level', dest='log_level', default=defaults.app.log_level,
                        help='Logging level.')
    parser.add_argument("--tensorboard", type=int, default=0,
                        help="Frequency of logging EM scalars into tensorboard. Set to 0 to disable.")
    parser.add_argument("--profile", type=str2bool, nargs='?', const=True, default=False,
                        help="Set to true to log a timing breakdown of the run.")

    sectionKeys = AttrDict()
    if mode in [AppMode.Simulate, AppMode.Bench]:
        addSynthArguments(parser, defaults.synth)
        sectionKeys.synthArgs = list(synthArgsGlobalDefaults.keys())
    if mode in [AppMode.Fit, AppMode.Stability, AppMode.Bench]:
        fitKeys = addFitArguments(parser, defaults.fit, mode)
        sectionKeys.fitArgs = fitKeys
    if mode == AppMode.Fit:
        parser.add_argument('--input', required=True,
                            help='Comma separated expression CSV files, one per view.')
    if mode == AppMode.Stability:
        parser.add_argument('--input', required=True,
                            help='Comma separated expression CSV files, one per view.')
        addStabilityArguments(parser, defaults.stability)
        sectionKeys.stabilityArgs = list(stabilityArgsGlobalDefaults.keys())
    if mode == AppMode.Bench:
        addBenchArguments(parser, defaults.bench)
        sectionKeys.benchArgs = list(benchArgsGlobalDefaults.keys())
    if mode == AppMode.Evaluate:
        parser.add_argument('--edges', required=True, help='Estimated edge list TSV.')
        parser.add_argument('--truth', required=True, help='Ground truth edge list TSV.')
        parser.add_argument('--p', type=int, required=True, help='Number of genes.')

    # Parse args to build app config dictionary.
    parsedArgs = parser.parse_args(argv)

    # Spin out the per concern sections. Synth, stability and bench flags carry a prefix
    # in the flat namespace because their names collide with estimator flags.
    for label, keys in sectionKeys.items():
        prefix = {"synthArgs": "synth_", "stabilityArgs": "stability_", "benchArgs": "bench_"}.get(label, "")
        levelDown(parsedArgs, label, keys, prefix=prefix)
    levelDown(parsedArgs, "debug", ["tensorboard", "profile"])

    appConfig = AttrDict(vars(parsedArgs))
    appConfig.mode = int(mode)
    appConfig.domain = domainName
    appConfig.version = mvtlasso.__version__
    appConfig.threads = resolveThreads(appConfig.threads)

    postProcessAppConfig(appConfig, mode)
    return appConfig

def readSpecFile(path):
    """ Reads a JSON document holding synth section keys at top level. """
    if not os.path.isfile(path):
        raise ValidationError("Spec file {0} does not exist.".format(path))
    try:
        with open(path, "r", encoding="utf-8") as fin:
            values = json.load(fin)
    except ValueError as e:
        raise ValidationError("Spec file {0} is not valid JSON: {1}".format(path, e))
    if not isinstance(values, dict):
        raise ValidationError("Spec file {0} must hold an object.".format(path))
    unknown = set(values) - set(synthArgsGlobalDefaults)
    if unknown:
        raise ValidationError("Spec file {0}: unknown keys {1}".format(path, ", ".join(sorted(unknown))))
    return values

def addSynthArguments(parser, defaults):
    parser.add_argument("--p", dest="synth_p", type=int, default=defaults.p, help="Number of genes.")
    parser.add_argument("--n", dest="synth_n", type=int, default=defaults.n, help="Samples per view.")
    parser.add_argument("--k", dest="synth_k", type=int, default=defaults.k, help="Signal columns per view.")
    parser.add_argument("--views", dest="synth_views", type=int, default=defaults.views, help="Number of views.")
    parser.add_argument("--nu", dest="synth_nu", type=float, default=defaults.nu,
                        help="Degrees of freedom of the generated t columns.")
    parser.add_argument("--edge-prob", "--edge_prob", dest="synth_edge_prob", type=float, default=defaults.edge_prob,
                        help="Probability of each edge sign in the generated precision matrix.")
    parser.add_argument("--sigma", dest="synth_sigma", type=float, default=defaults.sigma,
                        help="Noise column scale.")
    parser.add_argument("--seed", dest="synth_seed", type=int, default=defaults.seed,
                        help="Generation seed.")

def addFitArguments(parser, defaults, mode):
    """
    Adds the estimator flags. Returns the fitArgs keys present in mode.
    """
    keys = list(fitArgsGlobalDefaults.keys())
    if mode == AppMode.Bench:
        keys = [key for key in keys if key not in benchSharedKeys]
    if mode != AppMode.Bench:
        parser.add_argument("--method", default=defaults.method,
                            help="Estimator: mvtlasso, tlasso, glasso, glasso-ica or glasso-std.")
        parser.add_argument("--nu", type=float, default=defaults.nu, help="Degrees of freedom of the fitted model.")
        parser.add_argument("--seed", type=int, default=defaults.seed, help="Seed of the fit.")
    if mode == AppMode.Fit:
        parser.add_argument("--lambda", "--lam", dest="lam", type=float, default=defaults.lam,
                            help="Graphical lasso penalty.")
    elif mode == AppMode.Stability:
        keys.remove("lam")
    if mode != AppMode.Bench:
        parser.add_argument("--k", default=defaults.k, help="Signal ranks: auto or k1,k2,...")
    else:
        keys.remove("k")
    parser.add_argument("--max_em_iter", type=int, default=defaults.max_em_iter, help="EM iteration cap.")
    parser.add_argument("--em_tol", type=float, default=defaults.em_tol,
                        help="Relative log-likelihood change that stops EM.")
    parser.add_argument("--msteps_per_iter", type=int, default=defaults.msteps_per_iter,
                        help="Passes through the M-substeps per EM iteration.")
    parser.add_argument("--w_init", default=defaults.w_init, choices=["ica", "identity"],
                        help="Initial unmixing matrices.")
    parser.add_argument("--penalize_diagonal", type=str2bool, default=defaults.penalize_diagonal,
                        help="Whether the l1 penalty includes the diagonal of Theta.")
    parser.add_argument("--glasso_max_iter", type=int, default=defaults.glasso_max_iter,
                        help="Graphical lasso sweep cap.")
    parser.add_argument("--glasso_tol", type=float, default=defaults.glasso_tol,
                        help="Graphical lasso tolerance.")
    return keys

def addStabilityArguments(parser, defaults):
    parser.add_argument("--lambdas", dest="stability_lambdas", type=parseFloatList, default=defaults.lambdas,
                        help="Comma separated penalties. A log grid below lambda_max is used when omitted.")
    parser.add_argument("--replicates", dest="stability_replicates", type=int, default=defaults.replicates,
                        help="Number of subsampled refits.")
    parser.add_argument("--fraction", dest="stability_fraction", type=float, default=defaults.fraction,
                        help="Share of each view's samples kept per replicate.")
    parser.add_argument("--threshold", dest="stability_threshold", type=float, default=defaults.threshold,
                        help="Edges with selection probability above this are selected.")
    parser.add_argument("--grid_count", dest="stability_grid_count", type=int, default=defaults.grid_count,
                        help="Points of the default penalty grid.")
    parser.add_argument("--grid_ratio", dest="stability_grid_ratio", type=float, default=defaults.grid_ratio,
                        help="Smallest over largest penalty of the default grid.")

def addBenchArguments(parser, defaults):
    parser.add_argument("--methods", dest="bench_methods", default=defaults.methods,
                        help="Comma separated estimator names.")
    parser.add_argument("--seeds", dest="bench_seeds", type=int, default=defaults.seeds,
                        help="Number of generation seeds.")
    parser.add_argument("--first_seed", dest="bench_first_seed", type=int, default=defaults.first_seed,
                        help="First generation seed.")
    parser.add_argument("--lambdas", dest="bench_lambdas", type=parseFloatList, default=defaults.lambdas,
                        help="Shared comma separated penalties. Per method grids are used when omitted.")
    parser.add_argument("--grid_count", dest="bench_grid_count", type=int, default=defaults.grid_count,
                        help="Points of the per method penalty grid.")
    parser.add_argument("--grid_ratio", dest="bench_grid_ratio", type=float, default=defaults.grid_ratio,
                        help="Smallest over largest penalty of the per method grid.")

def postProcessAppConfig(appConfig, mode):
    """
        Post process appConfig.
        Resolve the output folder, creating a fresh run folder when none was given.
    """
    if appConfig.out is None:
        if mode == AppMode.Evaluate:
            appConfig.runFolder = None
            return
        runFolder, appConfig.run = getRunFolder(appConfig.runs_root, "runFolders/", modeName(mode))
        appConfig.out = os.path.join(appConfig.runs_root, runFolder)
    os.makedirs(appConfig.out, exist_ok=True)
    appConfig.runFolder = appConfig.out

def getRunFolder(dataFolderPath, allRunsFolder, createSuffix):
    """
    Creates and returns the run folder with the next free run index.

    Returns:
        (runFolder relative to dataFolderPath, runIndex)
    """
    existingRunFolders = glob.glob(os.path.join(dataFolderPath, allRunsFolder, "run." + "[0-9]" * 5 + ".*"))
    runIndices = [int(match.group(1)) for match in
                  (re.match(r"run\.(\d{5})\.", os.path.basename(folder)) for folder in existingRunFolders) if match]
    runIndex = max(runIndices) + 1 if runIndices else 0
    runFolder = "{0}run.{1:0>5}.{2}/".format(allRunsFolder, runIndex, createSuffix)
    os.makedirs(os.path.join(dataFolderPath, runFolder), exist_ok=True)
    return runFolder, runIndex

def modeName(mode):
    return {AppMode.Simulate: "simulate", AppMode.Fit: "fit", AppMode.Stability: "stability",
            AppMode.Bench: "bench", AppMode.Evaluate: "eval"}[AppMode(mode)]

def estimatorFor(method, fitArgs, threads=1, nu=None):
    """
    Registry estimator for method with the fitArgs that apply to it.

    Raises:
        ValidationError: unknown method; the message lists the valid names.
    """
    optionNames = make_estimator(method).options
    candidates = {
        "nu": fitArgs.nu if nu is None else nu,
        "k_per_view": parseRanks(fitArgs.get("k", "auto")),
        "max_em_iter": fitArgs.max_em_iter,
        "em_tol": fitArgs.em_tol,
        "tol": fitArgs.em_tol,
        "msteps_per_iter": fitArgs.msteps_per_iter,
        "w_init": fitArgs.w_init,
        "penalize_diagonal": fitArgs.penalize_diagonal,
        "glasso_max_iter": fitArgs.glasso_max_iter,
        "glasso_tol": fitArgs.glasso_tol,
        "seed": fitArgs.get("seed", 0),
        "n_jobs": threads,
    }
    return make_estimator(method, **{key: value for key, value in candidates.items() if key in optionNames})

def setupLogging(appConfig, logName):
    level = getattr(logging, str(appConfig.log_level).upper(), None)
    if not isinstance(level, int):
        raise ValidationError("Unknown log level {0!r}.".format(appConfig.log_level))
    if appConfig.runFolder is None:
        logging.basicConfig(format=LOG_FORMAT, level=level, force=True)
    else:
        logging.basicConfig(filename=os.path.join(appConfig.runFolder, logName), format=LOG_FORMAT,
                            level=level, force=True)

    # Log config info.
    logging.info("Application Config: {0}".format(json.dumps(appConfig, indent=2, default=str)))

def tensorBoardHookFor(appConfig):
    if not appConfig.debug.tensorboard or appConfig.runFolder is None:
        return nullTensorBoardHook
    return TensorBoardHook(appConfig.debug.tensorboard, logdir=os.path.join(appConfig.runFolder, "tensorboard"))

def writeManifest(appConfig, seed, startTime, inputs=(), outputs=()):
    """
    Writes manifest.json: tool version, resolved config, seed, wall clock seconds and the
    sha256 digests of the input and output files.
    """
    config = json.loads(json.dumps(appConfig, default=str))
    for volatile in ["out", "runFolder", "run", "runs_root"]:
        config.pop(volatile, None)
    manifest = {
        "version": mvtlasso.__version__,
        "config": config,
        "seed": seed,
        "wall_clock": round(time.time() - startTime, 3),
        "inputs": {os.path.basename(path): file_digest(path) for path in inputs},
        "outputs": {os.path.basename(path): file_digest(path) for path in outputs},
    }
    return write_json(manifest, os.path.join(appConfig.runFolder, "manifest.json"))

def exitCodeFor(error):
    """ Exit code of a failed run, None for errors that are bugs. """
    if isinstance(error, (StageError, NumericError, GenerationError)):
        return EXIT_NUMERIC
    if isinstance(error, (ValidationError, ValueError)):
        return EXIT_VALIDATION
    if isinstance(error, OSError):
        return EXIT_IO
    return None

def runApp(mode, body, argv=None):
    """
    Loads the config, sets up logging and runs body(appConfig), mapping failures to exit codes:
    0 ok, 2 validation, 3 numerical failure, 4 I/O.
    """
    logger = logging.getLogger("apps." + modeName(mode))
    try:
        appConfig = loadConfig(mode, argv)
        setupLogging(appConfig, modeName(mode) + ".log")
        enableProfiling(appConfig.debug.profile)
        resetProfilingData()
        body(appConfig)
        if appConfig.debug.profile:
            summary = summarizeLabelNodes(profilingData[0])
            logger.info("Profile: {0}".format(json.dumps(summary, indent=2)))
        return EXIT_OK
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_VALIDATION
    except Exception as e:
        code = exitCodeFor(e)
        if code is None:
            raise
        stage = " (stage {0})".format(e.stage) if isinstance(e, StageError) else ""
        message = "mvtlasso {0}{1}: {2}".format(modeName(mode), stage, e)
        logger.error(message)
        print(message, file=sys.stderr)
        return code
