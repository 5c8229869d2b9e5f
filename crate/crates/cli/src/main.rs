//! `whtmlgate`: validate and project wHTML, compile and run scripts,
//! transcode images, and run or talk to the gateway.

use std::fs;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use whtmlgate_core::bench::{self, BenchConfig};
use whtmlgate_core::envelope::SessionKey;
use whtmlgate_core::gateway::{self, ClientError, Gateway, GatewayConfig, Mode, OriginServer};
use whtmlgate_core::markup::{self, ParseError, RegistryError, TagRegistry, WellFormednessError};
use whtmlgate_core::media::{self, DEFAULT_THRESHOLD};
use whtmlgate_core::projector::{self, Target};
use whtmlgate_core::wmls::{self, ScriptSource, Value};

const EXIT_INVALID: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "whtmlgate", version, about = "wHTML gateway toolkit")]
struct Cli {
    /// Tag registry file (defaults to the built-in registry).
    #[arg(long, global = true, env = "WHTML_REGISTRY")]
    registry: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a wHTML file is well-formed.
    Validate { file: PathBuf },
    /// Project a wHTML file to HTML or WML.
    Project {
        file: PathBuf,
        #[arg(long, value_parser = parse_target)]
        profile: Target,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile a script to a `.wbc` bytecode file.
    Compile {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a function from a `.wbc` file and print its result.
    Run {
        file: PathBuf,
        function: String,
        /// Arguments: integers, `true`/`false`, anything else is a string.
        args: Vec<String>,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
    /// Convert a 24-bit BMP to WBMP.
    ToWbmp {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: u8,
    },
    /// Convert a WBMP to a 24-bit BMP.
    ToBmp {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the gateway.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long)]
        origin: String,
        #[arg(long, default_value = "passthrough", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value = "wbc-cache")]
        cache: PathBuf,
        /// Append audit records to this file.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Client-side session key in hex (legacy mode).
        #[arg(long, value_parser = parse_key)]
        client_key: Option<SessionKey>,
        /// Origin-side session key in hex (legacy mode).
        #[arg(long, value_parser = parse_key)]
        server_key: Option<SessionKey>,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
    /// Serve files from a directory as the origin server.
    Origin {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8081")]
        listen: String,
        /// Answer enveloped requests with files sealed under this hex key.
        #[arg(long, value_parser = parse_key)]
        key: Option<SessionKey>,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
    /// Fetch a URL, through a gateway if given.
    Fetch {
        url: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Pre-shared hex key, required for https and waps.
        #[arg(long, value_parser = parse_key)]
        key: Option<SessionKey>,
        /// Gateway address; defaults to the URL's host.
        #[arg(long)]
        gateway: Option<String>,
        /// Treat the body as wHTML and project it here instead of at a gateway.
        #[arg(long, value_parser = parse_target)]
        project: Option<Target>,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Measure projection overhead and relay throughput.
    Bench {
        /// Smaller inputs for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse::<Target>().map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_key(s: &str) -> Result<SessionKey, String> {
    let bytes = hex::decode(s).map_err(|e| format!("bad hex key: {e}"))?;
    SessionKey::pre_shared(bytes).map_err(|e| e.to_string())
}

struct Failure {
    code: u8,
    lines: Vec<String>,
}

impl Failure {
    fn new(code: u8, msg: impl std::fmt::Display) -> Self {
        Self {
            code,
            lines: vec![format!("whtmlgate: {msg}")],
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut err = io::stderr().lock();
            for line in f.lines {
                let _ = writeln!(err, "{line}");
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let registry_path = cli.registry;
    match cli.command {
        Command::Validate { file } => validate(&file, &registry(registry_path.as_deref())?),
        Command::Project { file, profile, output } => {
            project(&file, profile, output.as_deref(), &registry(registry_path.as_deref())?)
        }
        Command::Compile { file, output } => compile(&file, output.as_deref()),
        Command::Run {
            file,
            function,
            args,
            fuel,
        } => run_script(&file, &function, &args, fuel),
        Command::ToWbmp {
            file,
            output,
            threshold,
        } => {
            let bytes = read(&file)?;
            let bitmap =
                media::bmp_to_bitmap(&bytes, threshold).map_err(|e| Failure::new(EXIT_INVALID, at(&file, e)))?;
            emit(output.as_deref(), &media::encode_wbmp(&bitmap))
        }
        Command::ToBmp { file, output } => {
            let bytes = read(&file)?;
            let bitmap = media::decode_wbmp(&bytes).map_err(|e| Failure::new(EXIT_INVALID, at(&file, e)))?;
            emit(output.as_deref(), &media::bitmap_to_bmp(&bitmap))
        }
        Command::Serve {
            listen,
            origin,
            mode,
            cache,
            audit,
            client_key,
            server_key,
            timeout_ms,
        } => {
            let mut cfg = GatewayConfig::new(origin, cache);
            cfg.mode = mode;
            cfg.registry_path = registry_path;
            cfg.audit_path = audit;
            cfg.client_key = client_key;
            cfg.server_key = server_key;
            cfg.read_timeout = Duration::from_millis(timeout_ms);
            let gw = Gateway::new(cfg).map_err(|e| match e {
                gateway::GatewayError::MissingKeys => Failure::new(EXIT_USAGE, e),
                gateway::GatewayError::Registry(RegistryError::Io { .. }) | gateway::GatewayError::Io(_) => {
                    Failure::new(EXIT_IO, e)
                }
                gateway::GatewayError::Registry(_) => Failure::new(EXIT_INVALID, e),
            })?;
            let listener = bind(&listen)?;
            Arc::new(gw).serve(listener).map_err(|e| Failure::new(EXIT_IO, e))
        }
        Command::Origin {
            root,
            listen,
            key,
            timeout_ms,
        } => {
            if !root.is_dir() {
                return Err(Failure::new(EXIT_IO, format!("{} is not a directory", root.display())));
            }
            let listener = bind(&listen)?;
            Arc::new(OriginServer::new(root, key))
                .serve(listener, Duration::from_millis(timeout_ms))
                .map_err(|e| Failure::new(EXIT_IO, e))
        }
        Command::Fetch {
            url,
            output,
            key,
            gateway,
            project: local_profile,
            timeout_ms,
        } => {
            let body = gateway::fetch(&url, gateway.as_deref(), key.as_ref(), Duration::from_millis(timeout_ms))
                .map_err(|e| {
                    let code = match e {
                        ClientError::BadUrl(_) | ClientError::MissingKey(_) => EXIT_USAGE,
                        ClientError::Network(_) => EXIT_IO,
                        ClientError::Status { .. } | ClientError::Envelope(_) => EXIT_INVALID,
                    };
                    Failure::new(code, e)
                })?;
            match local_profile {
                None => emit(output.as_deref(), &body),
                Some(profile) => {
                    let reg = registry(registry_path.as_deref())?;
                    let doc = markup::parse(&body, &reg).map_err(|e| {
                        let p = e.position();
                        Failure::new(EXIT_INVALID, format!("{url}:{}:{}: {e}", p.line, p.column))
                    })?;
                    let projected =
                        projector::project(&doc, profile).map_err(|e| Failure::new(EXIT_INVALID, e))?;
                    emit(output.as_deref(), &projector::serialize(&projected))
                }
            }
        }
        Command::Bench { quick } => {
            let cfg = if quick {
                BenchConfig {
                    document_bytes: 8 * 1024,
                    envelope_bytes: 64 * 1024,
                    parse_iterations: 3,
                    relay_iterations: 3,
                }
            } else {
                BenchConfig::default()
            };
            let report = bench::run(&cfg).map_err(|e| Failure::new(EXIT_IO, e))?;
            emit(None, format!("{report}\n").as_bytes())
        }
    }
}

fn registry(path: Option<&Path>) -> Result<TagRegistry, Failure> {
    match path {
        None => Ok(TagRegistry::default()),
        Some(p) => TagRegistry::load(p).map_err(|e| {
            let code = if matches!(e, RegistryError::Io { .. }) { EXIT_IO } else { EXIT_INVALID };
            Failure::new(code, e)
        }),
    }
}

fn bind(addr: &str) -> Result<TcpListener, Failure> {
    TcpListener::bind(addr).map_err(|e| Failure::new(EXIT_IO, format!("cannot listen on {addr}: {e}")))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn at(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> CmdResult {
    let res = match output {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| e.to_string())
        }
    };
    res.map_err(|e| Failure::new(EXIT_IO, e))
}

fn diagnostics(file: &Path, e: &ParseError) -> Vec<String> {
    let name = file.display();
    match e {
        ParseError::WellFormedness(WellFormednessError::UnclosedTags(open)) => open
            .iter()
            .rev()
            .map(|t| format!("{name}:{}:{}: unclosed <{}>", t.position.line, t.position.column, t.name))
            .collect(),
        _ => {
            let p = e.position();
            vec![format!("{name}:{}:{}: {e}", p.line, p.column)]
        }
    }
}

fn parse_file(file: &Path, registry: &TagRegistry) -> Result<markup::WhtmlDocument, Failure> {
    let bytes = read(file)?;
    markup::parse(&bytes, registry).map_err(|e| Failure {
        code: EXIT_INVALID,
        lines: diagnostics(file, &e),
    })
}

fn validate(file: &Path, registry: &TagRegistry) -> CmdResult {
    parse_file(file, registry)?;
    emit(None, b"well-formed\n")
}

fn project(file: &Path, profile: Target, output: Option<&Path>, registry: &TagRegistry) -> CmdResult {
    let doc = parse_file(file, registry)?;
    let projected = projector::project(&doc, profile).map_err(|e| Failure::new(EXIT_INVALID, at(file, e)))?;
    emit(output, &projector::serialize(&projected))
}

fn compile(file: &Path, output: Option<&Path>) -> CmdResult {
    let src = ScriptSource::from_bytes(&read(file)?).map_err(|e| Failure::new(EXIT_INVALID, at(file, e)))?;
    let module = wmls::compile(&src).map_err(|e| Failure::new(EXIT_INVALID, at(file, e)))?;
    emit(output, &wmls::encode_module(&module))
}

fn script_arg(s: &str) -> Value {
    match s {
        "true" => Value::Boolean(true),
        "false" => Value::Boolean(false),
        _ => s.parse().map(Value::Integer).unwrap_or_else(|_| Value::String(s.to_string())),
    }
}

fn run_script(file: &Path, function: &str, args: &[String], fuel: u64) -> CmdResult {
    let module = wmls::decode_module(&read(file)?).map_err(|e| Failure::new(EXIT_INVALID, at(file, e)))?;
    let args: Vec<Value> = args.iter().map(|a| script_arg(a)).collect();
    let value = wmls::execute(&module, function, &args, fuel).map_err(|e| Failure::new(EXIT_INVALID, e))?;
    emit(None, format!("{value}\n").as_bytes())
}
