use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkState {
    Normal,
    ProtectiveStop,
}

/// Liveness rule: a link whose last frame is more than `window` outer ticks
/// old is considered lost.
pub fn watchdog_step(last_frame_age: u32, window: u32) -> LinkState {
    if last_frame_age > window {
        LinkState::ProtectiveStop
    } else {
        LinkState::Normal
    }
}

/// Frame-age tracker with an absorbing protective state: once tripped it
/// stays tripped until a fresh frame arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Watchdog {
    window: u32,
    age: u32,
    state: LinkState,
}

impl Watchdog {
    pub fn new(window: u32) -> Self {
        Self {
            window,
            age: 0,
            state: LinkState::Normal,
        }
    }

    pub fn age(&self) -> u32 {
        self.age
    }

    pub fn state(&self) -> LinkState {
        self.state
    }

    pub fn tripped(&self) -> bool {
        self.state == LinkState::ProtectiveStop
    }

    /// Closes one outer tick. `fresh` tells whether a frame arrived in it.
    pub fn tick(&mut self, fresh: bool) -> LinkState {
        if fresh {
            self.age = 0;
            self.state = LinkState::Normal;
        } else {
            self.age = self.age.saturating_add(1);
            if watchdog_step(self.age, self.window) == LinkState::ProtectiveStop {
                self.state = LinkState::ProtectiveStop;
            }
        }
        self.state
    }

    /// Forces the protective state, e.g. on an explicit stop command.
    pub fn trip(&mut self) {
        self.state = LinkState::ProtectiveStop;
    }
}

/// First-order low-pass pulling a current setpoint toward zero once per
/// inner tick: `i ← α i`.
pub fn protective_decay(setpoint: f64, alpha: f64) -> f64 {
    setpoint * alpha
}
