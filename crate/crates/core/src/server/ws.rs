use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use tokio::sync::broadcast::error::RecvError;

use super::routes::{reset, start, submit, Input};
use super::AppState;
use crate::wire::{ClientMessage, ErrorBody, ServerMessage};

pub(super) async fn handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    let text = serde_json::to_string(msg).expect("server messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn send_error(socket: &mut WebSocket, correlation_id: Option<u64>, code: &str, message: String) -> bool {
    send(socket, &ServerMessage::Error { correlation_id, payload: ErrorBody { code: code.into(), message } }).await
}

/// One snapshot, then every event in seq order. A client that falls more
/// than the broadcast capacity behind gets a terminal error.
async fn connection(mut socket: WebSocket, state: AppState) {
    // Subscribe before reading the snapshot so nothing falls between them.
    let mut rx = state.subscribe();
    let Some(current) = state.current() else {
        send_error(&mut socket, None, "no_session", "session not started".into()).await;
        let _ = socket.send(Message::Close(None)).await;
        return;
    };
    let mut last_seq = current.snapshot.last_seq;
    if !send(&mut socket, &ServerMessage::Snapshot { payload: Box::new((*current.snapshot).clone()) }).await {
        return;
    }
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(msg) => {
                    match &*msg {
                        ServerMessage::Event { seq, .. } => {
                            if *seq <= last_seq {
                                continue;
                            }
                            last_seq = *seq;
                        }
                        ServerMessage::Snapshot { payload } if payload.last_seq < last_seq => continue,
                        _ => {}
                    }
                    if !send(&mut socket, &msg).await {
                        return;
                    }
                    if let ServerMessage::Error { payload, .. } = &*msg {
                        if payload.code == "session_restarted" {
                            let _ = socket.send(Message::Close(None)).await;
                            return;
                        }
                    }
                }
                Err(RecvError::Lagged(n)) => {
                    send_error(&mut socket, None, "lagged", format!("client fell {n} messages behind")).await;
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
                Err(RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    if !on_client_message(&mut socket, &state, text.as_str()).await {
                        return;
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn on_client_message(socket: &mut WebSocket, state: &AppState, text: &str) -> bool {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return send_error(socket, None, "schema", e.to_string()).await,
    };
    let corr = msg.correlation_id().unwrap_or_else(|| state.correlation_id());
    let result = match msg {
        ClientMessage::Command { payload, .. } => submit(state, Input::Command(payload), Some(corr)).map(|_| ()),
        ClientMessage::ArtistStroke { payload, .. } => submit(state, Input::Stroke(payload), Some(corr)).map(|_| ()),
        ClientMessage::RobotMove { payload, .. } => submit(state, Input::Move(payload), Some(corr)).map(|_| ()),
        ClientMessage::Sensor { payload, .. } => submit(state, Input::Sensor(payload), Some(corr)).map(|_| ()),
        ClientMessage::Start { payload, .. } => {
            let overrides = if payload.is_null() { serde_json::json!({}) } else { payload };
            start(state, overrides).await.map(|_| ())
        }
        ClientMessage::Reset { .. } => reset(state).await.map(|_| ()),
    };
    match result {
        Ok(()) => true,
        Err(e) => send_error(socket, Some(corr), &e.body.code, e.body.message).await,
    }
}
