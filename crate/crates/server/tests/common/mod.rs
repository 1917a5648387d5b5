#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use presence_core::{
    AggregatorKind, CalendarEvent, CalendarEventKind, CalendarPayload, ComputerActivityPayload,
    DeviceSightingPayload, EnabledKinds, Evidence, ImStatus, ImStatusPayload, NetworkClass,
    OfficeMotionPayload, OptInConfig, Payload, Protocol, Timestamp, UserProfile,
};
use presence_server::{
    router_with_heartbeat, ClockMode, DeploymentConfig, EventLog, Hub, StreamFrame,
};
use serde_json::Value;
use tokio::sync::oneshot;

pub const T0: Timestamp = Timestamp::from_millis(1_714_982_400_000);

pub fn at(secs: i64) -> Timestamp {
    Timestamp::from_millis(T0.as_millis() + secs * 1000)
}

pub fn profile(user: &str) -> UserProfile {
    UserProfile {
        user_id: user.into(),
        display_name: user[..1].to_uppercase() + &user[1..],
        photo_ref: format!("{user}.png"),
        email: format!("{user}@example.com"),
        im_handles: BTreeMap::from([(Protocol::Skype, format!("{user}.skype"))]),
    }
}

pub fn config(clock: ClockMode) -> DeploymentConfig {
    DeploymentConfig {
        users: ["alice", "bob", "carol"].into_iter().map(profile).collect(),
        opt_ins: vec![
            OptInConfig { user_id: "alice".into(), enabled: EnabledKinds::ALL, show_location: true },
            OptInConfig { user_id: "bob".into(), enabled: EnabledKinds::ALL, show_location: false },
        ],
        internal_cidrs: vec!["10.0.0.0/16".into()],
        vpn_cidrs: vec!["172.16.0.0/12".into()],
        freshness: Default::default(),
        listen: "127.0.0.1:0".parse().unwrap(),
        log_path: None,
        clock,
    }
}

pub fn hub(config: &DeploymentConfig) -> Arc<Hub> {
    let clock = match config.clock {
        ClockMode::Virtual => presence_server::Clock::virtual_at(T0),
        ClockMode::System => presence_server::Clock::system(),
    };
    Arc::new(Hub::new(config, EventLog::memory(), clock))
}

pub fn sighting(user: &str, t: Timestamp, label: &str) -> Evidence {
    Evidence::new(
        user,
        "bt-1",
        t,
        Payload::DeviceSighting(DeviceSightingPayload {
            device_id: format!("{user}-phone"),
            ap_id: "ap-3".into(),
            ap_label: label.into(),
        }),
    )
}

pub fn motion(user: &str, t: Timestamp, occupant: bool, visitor: bool) -> Evidence {
    Evidence::new(
        user,
        "cam-1",
        t,
        Payload::OfficeMotion(OfficeMotionPayload { occupant_motion: occupant, visitor_motion: visitor }),
    )
}

pub fn im(user: &str, t: Timestamp, protocol: Protocol, status: ImStatus) -> Evidence {
    Evidence::new(user, "im-1", t, Payload::ImStatus(ImStatusPayload { protocol, status }))
}

pub fn computer(user: &str, t: Timestamp, class: NetworkClass, idle_secs: i64) -> Evidence {
    Evidence::new(
        user,
        "pc-1",
        t,
        Payload::ComputerActivity(ComputerActivityPayload {
            last_input_at: Timestamp::from_millis(t.as_millis() - idle_secs * 1000),
            network_class: class,
            host_id: format!("{user}-pc"),
        }),
    )
}

pub fn calendar(user: &str, t: Timestamp, kind: CalendarEventKind, start: Timestamp, end: Timestamp) -> Evidence {
    Evidence::new(
        user,
        "cal-1",
        t,
        Payload::Calendar(CalendarPayload { events: vec![CalendarEvent { start, end, kind, title: None }] }),
    )
}

pub fn optin(user: &str, enabled: EnabledKinds, show_location: bool) -> OptInConfig {
    OptInConfig { user_id: user.into(), enabled, show_location }
}

pub fn all_but(kind: AggregatorKind) -> EnabledKinds {
    EnabledKinds::ALL.with(kind, false)
}

/// A hub listening on an ephemeral port.
pub struct Running {
    pub base: String,
    pub hub: Arc<Hub>,
    pub client: reqwest::Client,
    shutdown: Option<oneshot::Sender<()>>,
}

impl Running {
    pub async fn start(config: &DeploymentConfig, heartbeat: Duration) -> Running {
        let hub = hub(config);
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel::<()>();
        let app = router_with_heartbeat(hub.clone(), heartbeat);
        tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
                .unwrap();
        });
        Running { base, hub, client: reqwest::Client::new(), shutdown: Some(tx) }
    }

    pub async fn post(&self, path: &str, body: &impl serde::Serialize) -> (u16, Value) {
        let resp = self.client.post(format!("{}{path}", self.base)).json(body).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        let resp = self
            .client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_owned())
            .send()
            .await
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn subscribe(&self) -> StreamClient {
        let resp = self.client.get(format!("{}/stream", self.base)).send().await.unwrap();
        assert_eq!(resp.headers()["content-type"], "application/x-ndjson");
        StreamClient { body: Box::pin(resp.bytes_stream()), buf: Vec::new() }
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

type ByteStream = std::pin::Pin<Box<dyn futures::Stream<Item = reqwest::Result<axum::body::Bytes>> + Send>>;

/// Headless subscriber: raw NDJSON lines off the wire.
pub struct StreamClient {
    body: ByteStream,
    buf: Vec<u8>,
}

impl StreamClient {
    pub async fn next_line(&mut self, wait: Duration) -> Option<String> {
        loop {
            if let Some(pos) = self.buf.iter().position(|b| *b == b'\n') {
                let line: Vec<u8> = self.buf.drain(..=pos).collect();
                return Some(String::from_utf8(line[..line.len() - 1].to_vec()).unwrap());
            }
            match tokio::time::timeout(wait, self.body.next()).await {
                Ok(Some(Ok(chunk))) => self.buf.extend_from_slice(&chunk),
                _ => return None,
            }
        }
    }

    pub async fn next_frame(&mut self, wait: Duration) -> Option<StreamFrame> {
        self.next_line(wait).await.map(|l| serde_json::from_str(&l).unwrap())
    }

    /// Frames until `wait` passes with nothing new.
    pub async fn drain(&mut self, wait: Duration) -> Vec<StreamFrame> {
        let mut out = Vec::new();
        while let Some(f) = self.next_frame(wait).await {
            out.push(f);
        }
        out
    }
}
