//! Live steering sessions over newline-delimited JSON (protocol version 1).
//!
//! Client messages are `{"v": 1, "op": ..., "args": {...}}` with `op` one of
//! `snapshot`, `step` (`n`, default 1), `run` (`n` optional; runs until
//! `pause` otherwise), `pause` and `patch` (an object of field -> value).
//! The server answers with `state`, `ack` and `error` events, each carrying
//! `"v": 1`. Patches are queued and take effect at the next step boundary.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::mpsc::{self, TryRecvError};
use std::thread;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{HarnessError, Result};
use crate::output::{emit_outputs, population_header, write_journal, OutputOptions, JOURNAL_JSON, MACRO_HEADER};
use crate::patch::{Patch, INSTITUTION_FIELDS};
use crate::run::Simulation;
use crate::scenario::Scenario;

pub const PROTOCOL_VERSION: u64 = 1;
pub const DEFAULT_WINDOW: usize = 50;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Request {
    v: u64,
    op: String,
    #[serde(default)]
    args: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Budget {
    Steps(usize),
    Unbounded,
}

/// One session: a simulation plus the run/pause state of its client.
#[derive(Debug, Clone)]
pub struct Session {
    sim: Simulation,
    window: usize,
    running: Option<Budget>,
}

fn event(kind: &str, body: Map<String, Value>) -> Value {
    let mut m = Map::new();
    m.insert("v".into(), PROTOCOL_VERSION.into());
    m.insert("event".into(), kind.into());
    m.extend(body);
    Value::Object(m)
}

fn ack(op: &str, detail: Value) -> Value {
    event(
        "ack",
        Map::from_iter([("op".into(), op.into()), ("detail".into(), detail)]),
    )
}

fn error(op: Option<&str>, detail: impl std::fmt::Display) -> Value {
    let mut m = Map::new();
    if let Some(op) = op {
        m.insert("op".into(), op.into());
    }
    m.insert("detail".into(), detail.to_string().into());
    event("error", m)
}

fn count(args: &Value, key: &str) -> std::result::Result<Option<usize>, String> {
    match args.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| format!("args.{key} must be a non-negative integer")),
    }
}

impl Session {
    pub fn new(scenario: Scenario, window: usize) -> Result<Self> {
        Ok(Self {
            sim: Simulation::new(scenario)?,
            window: window.max(1),
            running: None,
        })
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn is_running(&self) -> bool {
        self.running.is_some()
    }

    /// Rows as flat objects keyed by the CSV column names.
    pub fn row_json(&self, i: usize) -> Value {
        let p = &self.sim.population_rows()[i];
        let m = &self.sim.macro_rows()[i];
        let lineages: Vec<String> = self.sim.scenario().lineages.iter().map(|l| l.id.clone()).collect();
        let mut values: Vec<Value> = vec![p.t.into()];
        values.extend(p.shares.iter().map(|&x| Value::from(x)));
        values.push(p.f_bar.into());
        values.extend(p.rho_acs.iter().map(|&x| Value::from(x)));
        values.extend(p.rho_aut.iter().map(|&x| Value::from(x)));
        let mut row: Map<String, Value> = population_header(&lineages).into_iter().zip(values).collect();
        let macro_values: [Value; 7] = [
            m.pi_h.into(),
            m.pi_m.into(),
            m.gamma.into(),
            m.dependence.into(),
            m.delta_aut.into(),
            m.lever.into(),
            m.feedback_active.into(),
        ];
        row.extend(MACRO_HEADER[1..].iter().map(|k| k.to_string()).zip(macro_values));
        Value::Object(row)
    }

    fn params_json(&self) -> Value {
        let i = self.sim.institution();
        let w = self.sim.shaping();
        let inst_values = [
            Value::from(i.tariff_rate),
            Value::from(i.tariff_power.exponent()),
            Value::from(i.subsidy_rate),
            Value::from(i.delta_inst_h),
            Value::from(i.delta_inst_m),
        ];
        let mode = match w.eval_mode {
            symbiont_core::mdp::EvalMode::NegDistance => "neg_distance",
            symbiont_core::mdp::EvalMode::RawDistance => "raw_distance",
            symbiont_core::mdp::EvalMode::ExpNegDistance => "exp_neg_distance",
        };
        json!({
            "institution": Map::from_iter(INSTITUTION_FIELDS.iter().map(|k| k.to_string()).zip(inst_values)),
            "shaping": {
                "alpha_env": w.alpha_env,
                "alpha_m": w.alpha_m,
                "alpha_as": w.alpha_as,
                "alpha_b": w.alpha_b,
                "alpha_h": w.alpha_h,
                "eta_couple": w.eta_couple,
                "eval_mode": mode,
            },
        })
    }

    /// Current state with the last `window` rows.
    pub fn state_event(&self) -> Value {
        let n = self.sim.population_rows().len();
        let rows: Vec<Value> = (n.saturating_sub(self.window)..n).map(|i| self.row_json(i)).collect();
        event(
            "state",
            Map::from_iter([
                ("step".into(), self.sim.step_index().into()),
                ("t".into(), self.sim.time().into()),
                ("t_crit".into(), self.sim.t_crit().into()),
                ("rows".into(), rows.into()),
                ("params".into(), self.params_json()),
                (
                    "pending".into(),
                    serde_json::to_value(self.sim.pending()).expect("patches serialize"),
                ),
                (
                    "journal".into(),
                    serde_json::to_value(self.sim.journal_entries()).expect("journal serializes"),
                ),
            ]),
        )
    }

    /// Handles one client line; `run` only arms the session, see [`Session::tick`].
    pub fn handle_line(&mut self, line: &str) -> Vec<Value> {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return vec![error(None, format!("malformed message: {e}"))],
        };
        if req.v != PROTOCOL_VERSION {
            return vec![error(Some(&req.op), format!("unsupported protocol version {}", req.v))];
        }
        let op = req.op.as_str();
        match op {
            "snapshot" => vec![self.state_event()],
            "step" => match count(&req.args, "n") {
                Err(e) => vec![error(Some(op), e)],
                Ok(n) => match self.sim.advance(n.unwrap_or(1)) {
                    Ok(()) => vec![self.state_event()],
                    Err(e) => vec![error(Some(op), e), self.state_event()],
                },
            },
            "run" => match count(&req.args, "n") {
                Err(e) => vec![error(Some(op), e)],
                Ok(n) => {
                    self.running = Some(n.map_or(Budget::Unbounded, Budget::Steps));
                    if n == Some(0) {
                        self.running = None;
                    }
                    vec![ack(
                        op,
                        json!({ "step": self.sim.step_index(), "n": n, "running": self.is_running() }),
                    )]
                }
            },
            "pause" => {
                self.running = None;
                vec![ack(op, json!({ "step": self.sim.step_index(), "running": false }))]
            }
            "patch" => self.patch(&req.args),
            other => vec![error(Some(other), format!("unknown op `{other}`"))],
        }
    }

    fn patch(&mut self, args: &Value) -> Vec<Value> {
        let Some(obj) = args.as_object().filter(|o| !o.is_empty()) else {
            return vec![error(
                Some("patch"),
                "args must be a non-empty object of field -> value",
            )];
        };
        let patches = obj
            .iter()
            .map(|(k, v)| Patch {
                path: k.clone(),
                value: v.clone(),
            })
            .collect();
        match self.sim.queue_patches(patches) {
            Ok(queued) => vec![ack(
                "patch",
                json!({ "queued": queued, "applies_at_step": self.sim.step_index() }),
            )],
            Err(e) => vec![error(Some("patch"), e)],
        }
    }

    /// Advances one step of an armed run and reports the new state.
    pub fn tick(&mut self) -> Vec<Value> {
        let Some(budget) = self.running else {
            return Vec::new();
        };
        if let Err(e) = self.sim.step() {
            self.running = None;
            return vec![error(Some("run"), e), self.state_event()];
        }
        let mut out = vec![self.state_event()];
        if let Budget::Steps(n) = budget {
            if n <= 1 {
                self.running = None;
                out.push(ack(
                    "run",
                    json!({ "step": self.sim.step_index(), "running": false, "completed": true }),
                ));
            } else {
                self.running = Some(Budget::Steps(n - 1));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub window: usize,
    /// Directory receiving `session-<n>/` outputs and journal when a client disconnects.
    pub record: Option<PathBuf>,
    /// Stop accepting after this many connections.
    pub max_sessions: Option<usize>,
}

pub fn serve(scenario: Scenario, addr: impl ToSocketAddrs, opts: ServeOptions) -> Result<()> {
    let listener = TcpListener::bind(addr).map_err(|e| HarnessError::io("<listen address>".as_ref(), e))?;
    serve_listener(listener, scenario, opts)
}

/// Accepts connections, one independent session each.
pub fn serve_listener(listener: TcpListener, scenario: Scenario, opts: ServeOptions) -> Result<()> {
    let mut workers = Vec::new();
    for (i, stream) in listener.incoming().enumerate() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        let (scenario, opts2) = (scenario.clone(), opts.clone());
        workers.push(thread::spawn(move || connection(stream, scenario, &opts2, i + 1)));
        if opts.max_sessions.is_some_and(|m| i + 1 >= m) {
            break;
        }
    }
    for w in workers {
        if let Ok(Err(e)) = w.join() {
            return Err(e);
        }
    }
    Ok(())
}

fn connection(stream: TcpStream, scenario: Scenario, opts: &ServeOptions, index: usize) -> Result<()> {
    let io_err = |e| HarnessError::io("<session stream>".as_ref(), e);
    let window = if opts.window == 0 { DEFAULT_WINDOW } else { opts.window };
    let mut session = Session::new(scenario, window)?;
    let reader = BufReader::new(stream.try_clone().map_err(io_err)?);
    let mut out = BufWriter::new(stream);
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in reader.lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    loop {
        let events = if session.is_running() {
            match rx.try_recv() {
                Ok(line) => session.handle_line(&line),
                Err(TryRecvError::Empty) => session.tick(),
                Err(TryRecvError::Disconnected) => break,
            }
        } else {
            match rx.recv() {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => session.handle_line(&line),
                Err(_) => break,
            }
        };
        let mut send = || -> std::io::Result<()> {
            for e in &events {
                serde_json::to_writer(&mut out, e)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        };
        if send().is_err() {
            break;
        }
    }
    if let Some(dir) = &opts.record {
        let dir = dir.join(format!("session-{index}"));
        emit_outputs(&session.simulation().record(), &dir, OutputOptions::default())?;
        write_journal(&session.simulation().journal(), &dir.join(JOURNAL_JSON))?;
    }
    Ok(())
}
