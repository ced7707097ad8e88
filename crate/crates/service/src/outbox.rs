use std::collections::VecDeque;
use std::sync::Mutex;

use tokio::sync::Notify;

use crate::protocol::ServerBody;

/// Queue between a trial loop and the connection that sends its messages.
///
/// At most `state_cap` states wait at any time; pushing one more drops the
/// oldest waiting state. Other messages are never dropped.
pub struct Outbox {
    queue: Mutex<VecDeque<ServerBody>>,
    dropped: Mutex<u64>,
    notify: Notify,
    state_cap: usize,
}

impl Outbox {
    pub fn new(state_cap: usize) -> Self {
        Self { queue: Mutex::new(VecDeque::new()), dropped: Mutex::new(0), notify: Notify::new(), state_cap: state_cap.max(1) }
    }

    pub fn push(&self, body: ServerBody) {
        {
            let mut q = self.queue.lock().unwrap();
            if body.is_state() && q.iter().filter(|b| b.is_state()).count() >= self.state_cap {
                let oldest = q.iter().position(ServerBody::is_state).expect("a state is queued");
                q.remove(oldest);
                *self.dropped.lock().unwrap() += 1;
            }
            q.push_back(body);
        }
        self.notify.notify_one();
    }

    pub fn drain(&self) -> Vec<ServerBody> {
        self.queue.lock().unwrap().drain(..).collect()
    }

    pub fn clear(&self) {
        self.queue.lock().unwrap().clear();
    }

    /// Number of states dropped so far.
    pub fn dropped_states(&self) -> u64 {
        *self.dropped.lock().unwrap()
    }

    pub async fn notified(&self) {
        self.notify.notified().await
    }
}
