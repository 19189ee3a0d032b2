//! WebSocket front end for live sessions.
//!
//! Each connection gets its own [`LiveSession`] driven by a tokio interval
//! at the rink's tick rate. A reader task turns inbound frames into events;
//! the tick loop drains them once per tick and keeps only the newest input.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{CloseFrame, Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use clap::Args;
use dda_core::live::{
    parse_client_message, AdaptMode, ClientMessage, InboundError, LivePlan, LiveSession, ServerMessage, SessionPhase,
};
use dda_core::methods::{MethodAssets, MethodRegistry};
use dda_core::rink::Action;
use dda_core::{pipeline, DdaError, Result};
use futures::stream::{SplitSink, SplitStream};
use futures::{SinkExt, StreamExt};
use tokio::sync::mpsc;
use tokio::time::MissedTickBehavior;

use crate::ConfigArgs;

const CLOSE_NORMAL: u16 = 1000;
const CLOSE_UNSUPPORTED: u16 = 1003;
const CLOSE_POLICY: u16 = 1008;
const CLOSE_INTERNAL: u16 = 1011;

#[derive(Args)]
pub struct ServeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Port to listen on; 0 picks a free one.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Meta-trained policy checkpoint for fast_adapt.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// LSTM-FC checkpoint for lstm_fc.
    #[arg(long)]
    lstmfc_ckpt: Option<PathBuf>,
    /// Method used when the client's hello does not name one.
    #[arg(long, default_value = "fast_adapt")]
    method: String,
}

struct ServerState {
    registry: MethodRegistry,
    assets: MethodAssets,
    plan: LivePlan,
    default_method: String,
    base_seed: u64,
    connections: AtomicU64,
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let registry = MethodRegistry::with_builtins();
    if !registry.contains(&args.method) {
        return Err(DdaError::config(format!("unknown default method {:?}", args.method)));
    }
    let state = Arc::new(ServerState {
        assets: pipeline::assets_from(&cfg, args.ckpt.as_deref(), args.lstmfc_ckpt.as_deref())?,
        registry,
        plan: cfg.live,
        default_method: args.method.clone(),
        base_seed: cfg.seed,
        connections: AtomicU64::new(0),
    });
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
        let addr: SocketAddr = listener.local_addr()?;
        // Scripts and tests read this line to find the port.
        println!("listening on {addr}");
        let app = Router::new().route("/ws", get(upgrade)).with_state(state);
        axum::serve(listener, app).await?;
        Ok(())
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<ServerState>>) -> Response {
    ws.on_upgrade(move |socket| async move {
        if let Err(e) = run_connection(socket, state).await {
            log::warn!("connection ended with error: {e}");
        }
    })
}

enum Inbound {
    Input(Action),
    Phase(SessionPhase),
    Malformed(String),
    UnknownType(String),
    Closed,
}

type Sink = SplitSink<WebSocket, Message>;

async fn send(sink: &mut Sink, msg: &ServerMessage) -> Result<()> {
    let text = serde_json::to_string(msg)?;
    sink.send(Message::Text(text.into())).await.map_err(|e| DdaError::Protocol(e.to_string()))
}

async fn close(sink: &mut Sink, code: u16, reason: &str) {
    let frame = CloseFrame { code, reason: Utf8Bytes::from(reason) };
    if let Err(e) = sink.send(Message::Close(Some(frame))).await {
        log::debug!("close frame not delivered: {e}");
    }
}

/// Waits for the client's hello. Returns `None` when the connection ended
/// or was closed for a protocol violation.
async fn await_hello(stream: &mut SplitStream<WebSocket>, sink: &mut Sink) -> Option<(Option<String>, Option<u64>)> {
    while let Some(frame) = stream.next().await {
        let text = match frame {
            Ok(Message::Text(text)) => text,
            Ok(Message::Close(_)) | Err(_) => return None,
            Ok(_) => continue,
        };
        match parse_client_message(&text) {
            Ok(ClientMessage::Hello { method, seed }) => return Some((method, seed)),
            Ok(other) => log::debug!("ignoring {other:?} before hello"),
            Err(InboundError::UnknownType(kind)) => {
                close(sink, CLOSE_UNSUPPORTED, &format!("unknown message type {kind:?}")).await;
                return None;
            }
            Err(InboundError::Malformed(e)) => log::debug!("dropping malformed message before hello: {e}"),
        }
    }
    None
}

async fn read_loop(mut stream: SplitStream<WebSocket>, events: mpsc::UnboundedSender<Inbound>) {
    while let Some(frame) = stream.next().await {
        let event = match frame {
            Ok(Message::Text(text)) => match parse_client_message(&text) {
                Ok(ClientMessage::Input { target, .. }) => Inbound::Input(Action::new(target[0], target[1])),
                Ok(ClientMessage::Phase { phase }) => Inbound::Phase(phase),
                Ok(ClientMessage::Hello { .. }) => Inbound::Malformed("repeated hello".into()),
                Err(InboundError::UnknownType(kind)) => Inbound::UnknownType(kind),
                Err(InboundError::Malformed(e)) => Inbound::Malformed(e),
            },
            Ok(Message::Binary(_)) => Inbound::Malformed("binary frame".into()),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        if events.send(event).is_err() {
            return;
        }
    }
    let _ = events.send(Inbound::Closed);
}

async fn run_connection(socket: WebSocket, state: Arc<ServerState>) -> Result<()> {
    let (mut sink, mut stream) = socket.split();
    let Some((method, seed)) = await_hello(&mut stream, &mut sink).await else {
        return Ok(());
    };
    let name = method.unwrap_or_else(|| state.default_method.clone());
    let seed = seed.unwrap_or_else(|| state.base_seed + state.connections.fetch_add(1, Ordering::Relaxed));
    let method = match state.registry.create(&name, &state.assets, seed) {
        Ok(m) => m,
        Err(e) => {
            close(&mut sink, CLOSE_POLICY, &e.to_string()).await;
            return Ok(());
        }
    };
    let mut session = LiveSession::new(state.plan, state.assets.rink, method, seed, AdaptMode::Background)?;
    log::info!("session started: method {name}, seed {seed}");
    send(&mut sink, &session.hello()).await?;

    let (tx, mut rx) = mpsc::unbounded_channel();
    let reader = tokio::spawn(read_loop(stream, tx));
    let result = tick_loop(&mut session, &mut sink, &mut rx).await;
    reader.abort();
    match &result {
        Ok(()) => log::info!("session finished: {:?}", session.report()),
        Err(e) => close(&mut sink, CLOSE_INTERNAL, &e.to_string()).await,
    }
    result
}

async fn tick_loop(
    session: &mut LiveSession,
    sink: &mut Sink,
    rx: &mut mpsc::UnboundedReceiver<Inbound>,
) -> Result<()> {
    let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / session.tick_hz()));
    interval.set_missed_tick_behavior(MissedTickBehavior::Burst);
    loop {
        interval.tick().await;
        let mut input = None;
        while let Ok(event) = rx.try_recv() {
            match event {
                Inbound::Input(a) => input = Some(a),
                Inbound::Phase(p) => session.request_phase(p),
                Inbound::Malformed(e) => {
                    log::debug!("dropping inbound message: {e}");
                    session.note_dropped_input();
                }
                Inbound::UnknownType(kind) => {
                    close(sink, CLOSE_UNSUPPORTED, &format!("unknown message type {kind:?}")).await;
                    return Ok(());
                }
                Inbound::Closed => return Ok(()),
            }
        }
        for msg in session.advance_tick(input)? {
            send(sink, &msg).await?;
        }
        if session.phase() == SessionPhase::Finished {
            close(sink, CLOSE_NORMAL, "session finished").await;
            return Ok(());
        }
    }
}
