use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use breakrisk_core::ingest::{
    ingest as ingest_spans, write_spans, IngestConfig, OrphanPolicy, SpanFormat, TimeWindow,
    UnpairedClient,
};
use breakrisk_core::risk::{render_score, SweepEntry};
use breakrisk_core::sim::{builtin_fixture, generate_traces, TopologySpec};
use breakrisk_core::{risk as score, sweep_single_ops, BreakingSet, RiskMode, Snapshot};
use breakrisk_service::{AppState, ServiceConfig, SnapshotSource};

use crate::args::{
    FixtureArgs, GenerateArgs, IngestArgs, Orphans, ReportFormat, RiskArgs, ServeArgs,
    SnapshotArgs, SweepArgs, SweepFormat,
};
use crate::error::CliError;

type Outcome = Result<(), CliError>;

fn source(args: &SnapshotArgs) -> SnapshotSource {
    match (&args.msp, args.fixture) {
        (Some(path), _) => SnapshotSource::File(path.clone()),
        (None, Some(id)) => SnapshotSource::Fixture(id),
        (None, None) => unreachable!("clap requires --msp or --fixture"),
    }
}

fn load(args: &SnapshotArgs) -> Result<Snapshot, CliError> {
    source(args).load().map_err(CliError::runtime)
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::runtime)
        }
    }
}

pub fn ingest(args: IngestArgs) -> Outcome {
    let mut cfg = IngestConfig {
        mapping: args.mapping,
        entry_label: args.entry_label,
        on_orphan: match args.on_orphan {
            Orphans::Drop => OrphanPolicy::Drop,
            Orphans::Reject => OrphanPolicy::Reject,
        },
        unpaired_client: if args.skip_unpaired {
            UnpairedClient::Skip
        } else {
            UnpairedClient::UseClientName {
                prefix: args.unpaired_prefix,
            }
        },
        window: match (args.window_start_ns, args.window_end_ns) {
            (Some(start_ns), Some(end_ns)) => Some(TimeWindow { start_ns, end_ns }),
            _ => None,
        },
        ..Default::default()
    };
    if let Some(path) = &args.path_ids_from {
        cfg = cfg.with_path_ids_from(&Snapshot::load(path).map_err(CliError::runtime)?);
    }
    let mut buffers = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        buffers.push(bytes);
    }
    let (snapshot, report) =
        ingest_spans(buffers.iter().map(|b| (b.as_slice(), args.format)), &cfg)
            .map_err(CliError::runtime)?;
    snapshot.save(&args.out).map_err(CliError::runtime)?;
    log::info!(
        "wrote {} ({} requests)",
        args.out.display(),
        snapshot.grand_total()
    );
    emit(
        &(serde_json::to_string(&report).expect("report serializes") + "\n"),
        None,
    )
}

pub fn risk(args: RiskArgs) -> Outcome {
    let set =
        BreakingSet::parse_list(&args.breaking).map_err(|e| CliError::Usage(e.to_string()))?;
    if set.is_empty() {
        return Err(CliError::Usage("--break names no operations".into()));
    }
    let snapshot = load(&args.snapshot)?;
    let report = score(&snapshot, &set, args.mode).map_err(CliError::runtime)?;
    let text = match args.format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Table => report.to_string(),
    };
    emit(&text, None)?;
    match args.fail_above {
        Some(limit) if report.total > limit => Err(CliError::Threshold {
            total: report.total,
            limit,
        }),
        _ => Ok(()),
    }
}

pub fn sweep(args: SweepArgs) -> Outcome {
    let snapshot = load(&args.snapshot)?;
    if snapshot.is_empty() {
        return Err(CliError::Runtime(
            "snapshot has no requests; risk is undefined".into(),
        ));
    }
    let rows = sweep_single_ops(&snapshot, args.mode).map_err(CliError::runtime)?;
    let text = match args.format {
        SweepFormat::Json => {
            #[derive(serde::Serialize)]
            struct Sweep<'a> {
                mode: RiskMode,
                sweep: &'a [SweepEntry],
            }
            let body = Sweep {
                mode: args.mode,
                sweep: &rows,
            };
            serde_json::to_string(&body).expect("sweep serializes") + "\n"
        }
        SweepFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["operation", "score"])
                .map_err(CliError::runtime)?;
            for row in &rows {
                w.write_record([row.operation.label(), &render_score(row.score)])
                    .map_err(CliError::runtime)?;
            }
            String::from_utf8(w.into_inner().map_err(CliError::runtime)?)
                .expect("csv output is utf-8")
        }
    };
    emit(&text, None)
}

pub fn fixture(args: FixtureArgs) -> Outcome {
    emit(
        &(builtin_fixture(args.id).to_json() + "\n"),
        args.out.as_deref(),
    )
}

pub fn generate(args: GenerateArgs) -> Outcome {
    let spec = match (&args.topology, args.fixture) {
        (Some(path), _) => TopologySpec::load(path).map_err(CliError::runtime)?,
        (None, Some(id)) => TopologySpec::from_snapshot(&builtin_fixture(id), args.seed),
        (None, None) => unreachable!("clap requires --topology or --fixture"),
    };
    let n = match args.requests {
        Some(n) => n,
        None => spec.requests_per_replay().map_err(CliError::runtime)?,
    };
    let spans = generate_traces(&spec, n).map_err(CliError::runtime)?;
    let mut text = write_spans(&spans, args.format);
    if args.format == SpanFormat::OtlpJson {
        text.push('\n');
    }
    emit(&text, args.out.as_deref())
}

pub fn serve(args: ServeArgs) -> Outcome {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::load(path).map_err(CliError::runtime)?,
        None => ServiceConfig::default(),
    };
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    if let Some(mode) = args.mode {
        config.default_mode = mode;
    }
    let source = source(&args.snapshot);
    let reloadable = matches!(source, SnapshotSource::File(_));
    let state =
        Arc::new(AppState::from_source(source, config.default_mode).map_err(CliError::runtime)?);
    let app = breakrisk_service::router(state.clone(), &config).map_err(CliError::runtime)?;

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::runtime)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {}: {e}", config.listen)))?;
        let address = listener.local_addr().map_err(CliError::runtime)?;
        #[cfg(unix)]
        if reloadable {
            breakrisk_service::spawn_sighup_reload(state).map_err(CliError::runtime)?;
        }
        eprintln!(
            "{}",
            serde_json::json!({"event": "listening", "address": address.to_string()})
        );
        breakrisk_service::serve(listener, app, shutdown_signal())
            .await
            .map_err(CliError::runtime)
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = match signal(SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => return std::future::pending().await,
        };
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}
