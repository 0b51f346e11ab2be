use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::{IntoResponse, Response};
use serde::{Deserialize, Serialize};

use convflow::engine::Utterance;

use crate::{AnswerResponse, ApiError, AppState, Step};

/// Server → client events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerEvent {
    Utterance { utterance: Utterance },
    Outcome { outcome: AnswerResponse },
    Error { error: String, message: String },
    Finished,
}

/// Client → server messages.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Answer { text: String },
}

pub(crate) async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Result<Response, ApiError> {
    state.slot(&id)?;
    match ws {
        Ok(ws) => Ok(ws.on_upgrade(move |socket| run(state, id, socket))),
        Err(rej) => Ok(rej.into_response()),
    }
}

fn error_event(e: &ApiError) -> ServerEvent {
    ServerEvent::Error {
        error: e.code.clone(),
        message: e.message.clone(),
    }
}

async fn send(socket: &mut WebSocket, ev: &ServerEvent) -> bool {
    let text = serde_json::to_string(ev).expect("events serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn run(state: AppState, id: String, mut socket: WebSocket) {
    loop {
        // push robot turns until an answer is needed
        match state.step(&id).await {
            Ok(Step::Utterance(u)) => {
                let awaiting = u.awaiting_input;
                if !send(&mut socket, &ServerEvent::Utterance { utterance: u }).await {
                    return;
                }
                if !awaiting {
                    continue;
                }
            }
            Ok(Step::Finished) => {
                send(&mut socket, &ServerEvent::Finished).await;
                let _ = socket.send(Message::Close(None)).await;
                return;
            }
            Err(e) if e.code == "E_AWAITING_INPUT" => {}
            Err(e) => {
                send(&mut socket, &error_event(&e)).await;
                let _ = socket.send(Message::Close(None)).await;
                return;
            }
        }
        // wait for a valid answer
        loop {
            let msg = match socket.recv().await {
                Some(Ok(Message::Text(t))) => t,
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => continue,
            };
            let parsed: Result<ClientMessage, _> = serde_json::from_str(msg.as_str());
            let ClientMessage::Answer { text } = match parsed {
                Ok(m) => m,
                Err(e) => {
                    let err = ApiError::new(axum::http::StatusCode::BAD_REQUEST, "E_BAD_MESSAGE", e.to_string());
                    if !send(&mut socket, &error_event(&err)).await {
                        return;
                    }
                    continue;
                }
            };
            match state.answer(&id, &text).await {
                Ok(outcome) => {
                    if !send(&mut socket, &ServerEvent::Outcome { outcome }).await {
                        return;
                    }
                    break;
                }
                Err(e) => {
                    if !send(&mut socket, &error_event(&e)).await {
                        return;
                    }
                }
            }
        }
    }
}
