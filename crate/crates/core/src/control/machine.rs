//! The per-session control loop.
//!
//! Onboarding (breathing screen, 3-2-1 countdown), gameplay (first pitch,
//! actuation with optional second pitch) and offboarding (hidden result
//! behind the reveal button) for every round. The machine owns the game
//! state and the session's gesture RNG; everything it needs from the
//! outside arrives as a [`SessionEvent`] and everything it wants done
//! leaves as an [`Effect`].

use serde::{Deserialize, Serialize};

use super::types::*;
use crate::clock::Millis;
use crate::game::{
    draw_gesture, Channel, GameError, GameKind, GameMode, GameRules, GameState, Gesture, PerHand,
    RoundResult, Side,
};
use crate::rng::{SessionRng, Stream};

/// Everything that shapes a session's control loop except the game rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSetup {
    pub game: GameKind,
    pub mode: GameMode,
    pub sound: SoundMode,
    pub timing: TimingConfig,
    /// Active hands; two for every supported rig configuration.
    pub hands: usize,
}

impl LoopSetup {
    pub fn new(game: GameKind, mode: GameMode, sound: SoundMode) -> Self {
        Self {
            game,
            mode,
            sound,
            timing: TimingConfig::default(),
            hands: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedHand {
    pub side: Side,
    pub gesture: Gesture,
    /// `None` for the open palm.
    pub channel: Option<Channel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundPlan {
    pub hands: Vec<PlannedHand>,
}

impl RoundPlan {
    pub fn gestures(&self) -> Vec<(Side, Gesture)> {
        self.hands.iter().map(|h| (h.side, h.gesture)).collect()
    }

    pub fn for_side(&self, side: Side) -> Option<&PlannedHand> {
        self.hands.iter().find(|h| h.side == side)
    }
}

/// Draws the gestures for the next round: both hands for Godai and Ídio,
/// only the hand whose turn it is for Eptá.
pub fn plan_round(game: &GameState, rng: &mut SessionRng) -> Result<RoundPlan, GameError> {
    if game.is_finished() {
        return Err(match game {
            GameState::Idio(_) => GameError::NoGesturesRemaining,
            GameState::Epta(_) => GameError::GameOver,
            GameState::Godai(_) => GameError::AlreadyFinished,
        });
    }
    let hands = game
        .hands_in_next_round()
        .into_iter()
        .map(|side| {
            let gesture = draw_gesture(rng, game)?;
            Ok(PlannedHand {
                side,
                gesture,
                channel: gesture.channel(),
            })
        })
        .collect::<Result<Vec<_>, GameError>>()?;
    Ok(RoundPlan { hands })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionMachine {
    setup: LoopSetup,
    rules: GameRules,
    phase: SessionPhase,
    game: GameState,
    rng: SessionRng,
    next_deadline: u64,
    phase_timer: Option<DeadlineId>,
    hide_timer: Option<DeadlineId>,
    plan: Option<RoundPlan>,
    acked: PerHand<bool>,
    last_result: Option<RoundResult>,
    rounds_played: u32,
    usage_notified: bool,
    now: Millis,
}

impl SessionMachine {
    pub fn new(setup: LoopSetup, rules: GameRules, seed: u64) -> Self {
        let game = GameState::new(setup.game, setup.mode, &rules, setup.hands);
        Self {
            setup,
            rules,
            phase: SessionPhase::Idle,
            game,
            rng: SessionRng::for_stream(seed, Stream::Gestures),
            next_deadline: 0,
            phase_timer: None,
            hide_timer: None,
            plan: None,
            acked: PerHand::default(),
            last_result: None,
            rounds_played: 0,
            usage_notified: false,
            now: 0,
        }
    }

    pub fn setup(&self) -> &LoopSetup {
        &self.setup
    }

    pub fn rules(&self) -> &GameRules {
        &self.rules
    }

    pub fn phase(&self) -> &SessionPhase {
        &self.phase
    }

    pub fn game(&self) -> &GameState {
        &self.game
    }

    /// Gestures of the round in flight (or the one just resolved).
    pub fn current_plan(&self) -> Option<&RoundPlan> {
        self.plan.as_ref()
    }

    pub fn acked(&self) -> PerHand<bool> {
        self.acked
    }

    pub fn last_result(&self) -> Option<&RoundResult> {
        self.last_result.as_ref()
    }

    pub fn rounds_played(&self) -> u32 {
        self.rounds_played
    }

    /// Timers the machine is currently waiting on.
    pub fn armed_timers(&self) -> Vec<DeadlineId> {
        self.phase_timer
            .into_iter()
            .chain(self.hide_timer)
            .collect()
    }

    /// Pure transition: the machine after `ev` at `now` and the effects to run.
    pub fn transition(
        &self,
        ev: SessionEvent,
        now: Millis,
    ) -> Result<(SessionMachine, Vec<Effect>), ControlError> {
        let mut next = self.clone();
        let effects = next.step(ev, now)?;
        Ok((next, effects))
    }

    /// Applies `ev` in place. On error the machine is left untouched.
    pub fn advance(&mut self, ev: SessionEvent, now: Millis) -> Result<Vec<Effect>, ControlError> {
        let (next, effects) = self.transition(ev, now)?;
        *self = next;
        Ok(effects)
    }

    fn invalid(&self, event: SessionEvent) -> ControlError {
        ControlError::InvalidEvent {
            phase: self.phase.clone(),
            event,
        }
    }

    fn arm(&mut self, ms: u64) -> (DeadlineId, Effect) {
        self.next_deadline += 1;
        let id = DeadlineId(self.next_deadline);
        (id, Effect::ArmTimer { id, ms })
    }

    fn arm_phase(&mut self, ms: u64) -> Effect {
        let (id, fx) = self.arm(ms);
        self.phase_timer = Some(id);
        fx
    }

    fn step(&mut self, ev: SessionEvent, now: Millis) -> Result<Vec<Effect>, ControlError> {
        self.now = now;
        match ev {
            SessionEvent::KillSwitch(hand) => {
                self.phase_timer = None;
                self.plan_interrupted();
                self.phase = SessionPhase::SafeOff;
                return Ok(vec![
                    Effect::SendStopAll,
                    Effect::AppendLog {
                        note: SessionNote::KillSwitch { hand },
                    },
                ]);
            }
            SessionEvent::UsageLimitReached => {
                if self.usage_notified {
                    return Ok(Vec::new());
                }
                self.usage_notified = true;
                return Ok(vec![
                    Effect::NotifyUsageLimit,
                    Effect::AppendLog {
                        note: SessionNote::UsageLimit,
                    },
                ]);
            }
            SessionEvent::ActuationAcked(side) => {
                if self
                    .plan
                    .as_ref()
                    .is_some_and(|p| p.for_side(side).is_some())
                {
                    self.acked[side] = true;
                }
                return Ok(Vec::new());
            }
            SessionEvent::TimerElapsed(id) => return self.timer(id),
            _ => {}
        }

        match (&self.phase, ev) {
            (SessionPhase::Idle | SessionPhase::Completed, SessionEvent::StartPressed) => {
                if self.phase == SessionPhase::Completed {
                    self.game = GameState::new(
                        self.setup.game,
                        self.setup.mode,
                        &self.rules,
                        self.setup.hands,
                    );
                    self.plan = None;
                    self.last_result = None;
                }
                Ok(self.enter_breathing())
            }
            (SessionPhase::Breathing, SessionEvent::SkipBreathing) => Ok(self.enter_countdown(3)),
            (SessionPhase::InterpretWindow, SessionEvent::RevealPressed) => {
                let result = self
                    .last_result
                    .clone()
                    .expect("a resolved round precedes the interpret window");
                let ms = self.setup.timing.reveal_ms;
                self.phase_timer = None;
                let (id, arm) = self.arm(ms);
                self.hide_timer = Some(id);
                self.phase = SessionPhase::Revealed;
                Ok(vec![
                    Effect::ShowResult {
                        result,
                        duration_ms: ms,
                    },
                    arm,
                ])
            }
            (SessionPhase::SafeOff, SessionEvent::VoiceCommand(_)) => Err(self.invalid(ev)),
            (_, SessionEvent::VoiceCommand(VoiceCommand::Stop)) => {
                self.phase_timer = None;
                self.plan_interrupted();
                self.phase = SessionPhase::SafeOff;
                Ok(vec![Effect::SendStopAll])
            }
            (
                SessionPhase::Breathing
                | SessionPhase::Countdown(_)
                | SessionPhase::AwaitRound
                | SessionPhase::FirstPitch
                | SessionPhase::Actuating
                | SessionPhase::InterpretWindow
                | SessionPhase::Revealed,
                SessionEvent::VoiceCommand(VoiceCommand::Pause),
            ) => {
                let resume_to = match self.phase {
                    SessionPhase::Breathing => SessionPhase::Breathing,
                    _ => SessionPhase::Countdown(3),
                };
                self.phase_timer = None;
                self.plan_interrupted();
                self.phase = SessionPhase::Paused {
                    resume_to: Box::new(resume_to),
                };
                Ok(vec![
                    Effect::SendStopAll,
                    Effect::AppendLog {
                        note: SessionNote::Paused,
                    },
                ])
            }
            (
                SessionPhase::Paused { resume_to },
                SessionEvent::VoiceCommand(VoiceCommand::Resume),
            ) => {
                let target = (**resume_to).clone();
                let mut fx = vec![Effect::AppendLog {
                    note: SessionNote::Resumed,
                }];
                if self.game.is_finished() {
                    self.phase = SessionPhase::Completed;
                } else if target == SessionPhase::Breathing {
                    fx.extend(self.enter_breathing());
                } else {
                    fx.extend(self.enter_countdown(3));
                }
                Ok(fx)
            }
            _ => Err(self.invalid(ev)),
        }
    }

    /// A round cut short by pause, stop or kill is void: nothing is resolved.
    fn plan_interrupted(&mut self) {
        if matches!(
            self.phase,
            SessionPhase::FirstPitch | SessionPhase::Actuating
        ) {
            self.plan = None;
        }
    }

    fn timer(&mut self, id: DeadlineId) -> Result<Vec<Effect>, ControlError> {
        if self.hide_timer == Some(id) {
            self.hide_timer = None;
            let mut fx = vec![Effect::HideResult];
            if self.phase == SessionPhase::Revealed {
                fx.extend(self.after_round());
            }
            return Ok(fx);
        }
        if self.phase_timer != Some(id) {
            return Ok(Vec::new());
        }
        self.phase_timer = None;
        match self.phase {
            SessionPhase::Breathing => Ok(self.enter_countdown(3)),
            SessionPhase::Countdown(tick) if tick > 1 => Ok(self.enter_countdown(tick - 1)),
            SessionPhase::Countdown(_) => Ok(self.enter_await()),
            SessionPhase::AwaitRound => self.begin_round(),
            SessionPhase::FirstPitch => Ok(self.enter_actuating()),
            SessionPhase::Actuating => self.finish_actuation(),
            SessionPhase::InterpretWindow => Ok(self.after_round()),
            _ => Ok(Vec::new()),
        }
    }

    fn enter_breathing(&mut self) -> Vec<Effect> {
        self.phase = SessionPhase::Breathing;
        let arm = self.arm_phase(self.setup.timing.breathing_max_ms);
        vec![Effect::ShowBreathing, arm]
    }

    fn enter_countdown(&mut self, tick: u8) -> Vec<Effect> {
        self.phase = SessionPhase::Countdown(tick);
        let arm = self.arm_phase(self.setup.timing.countdown_tick_ms);
        vec![
            Effect::ShowCountdown { tick },
            Effect::PlayCountdownSound { tick },
            arm,
        ]
    }

    fn enter_await(&mut self) -> Vec<Effect> {
        self.phase = SessionPhase::AwaitRound;
        vec![self.arm_phase(self.setup.timing.inter_round_gap_ms)]
    }

    fn begin_round(&mut self) -> Result<Vec<Effect>, ControlError> {
        let plan = plan_round(&self.game, &mut self.rng)?;
        self.plan = Some(plan);
        self.acked = PerHand::default();
        if self.setup.sound.first_pitch() {
            self.phase = SessionPhase::FirstPitch;
            let arm = self.arm_phase(self.setup.timing.first_pitch_ms);
            Ok(vec![Effect::PlayFirstPitch, arm])
        } else {
            Ok(self.enter_actuating())
        }
    }

    fn enter_actuating(&mut self) -> Vec<Effect> {
        self.phase = SessionPhase::Actuating;
        let ms = self.setup.timing.actuation_ms;
        let mut fx = Vec::new();
        let plan = self.plan.clone().expect("round planned before actuation");
        for hand in &plan.hands {
            if let Some(channel) = hand.channel {
                fx.push(Effect::SendActuate {
                    hand: hand.side,
                    channel,
                    duration_ms: ms,
                });
            }
            if self.setup.sound.second_pitch() {
                fx.push(Effect::PlaySecondPitch {
                    gesture: hand.gesture,
                });
            }
        }
        fx.push(self.arm_phase(ms));
        fx
    }

    fn finish_actuation(&mut self) -> Result<Vec<Effect>, ControlError> {
        let plan = self.plan.clone().expect("actuating without a plan");
        let (game, result) = self.game.apply_round(&self.rules, &plan.gestures())?;
        self.game = game;
        self.rounds_played += 1;
        self.last_result = Some(result.clone());
        self.phase = SessionPhase::InterpretWindow;
        let arm = self.arm_phase(self.setup.timing.interpret_window_ms);
        Ok(vec![
            Effect::AppendLog {
                note: SessionNote::RoundResolved { result },
            },
            arm,
        ])
    }

    fn after_round(&mut self) -> Vec<Effect> {
        if self.game.is_finished() {
            self.phase = SessionPhase::Completed;
            Vec::new()
        } else {
            self.enter_await()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameMode, RoundOutcome};

    fn machine(game: GameKind, mode: GameMode, sound: SoundMode) -> SessionMachine {
        SessionMachine::new(LoopSetup::new(game, mode, sound), GameRules::default(), 7)
    }

    fn timer_of(fx: &[Effect]) -> (DeadlineId, u64) {
        fx.iter()
            .rev()
            .find_map(|e| match e {
                Effect::ArmTimer { id, ms } => Some((*id, *ms)),
                _ => None,
            })
            .expect("an armed timer")
    }

    /// Start, skip breathing and run the countdown; returns the await timer.
    fn to_await(m: &mut SessionMachine) -> (DeadlineId, u64) {
        m.advance(SessionEvent::StartPressed, 0).unwrap();
        let mut fx = m.advance(SessionEvent::SkipBreathing, 0).unwrap();
        for _ in 0..3 {
            let (id, _) = timer_of(&fx);
            fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        }
        assert_eq!(*m.phase(), SessionPhase::AwaitRound);
        timer_of(&fx)
    }

    #[test]
    fn onboarding_sequence() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::TwoPitch);
        let fx = m.advance(SessionEvent::StartPressed, 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Breathing);
        assert_eq!(fx[0], Effect::ShowBreathing);
        assert_eq!(timer_of(&fx).1, 30_000);

        let mut fx = m.advance(SessionEvent::SkipBreathing, 10).unwrap();
        for tick in [3u8, 2, 1] {
            assert_eq!(*m.phase(), SessionPhase::Countdown(tick));
            let (id, _) = timer_of(&fx);
            assert_eq!(
                fx,
                vec![
                    Effect::ShowCountdown { tick },
                    Effect::PlayCountdownSound { tick },
                    Effect::ArmTimer { id, ms: 1000 },
                ]
            );
            fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        }
        assert_eq!(*m.phase(), SessionPhase::AwaitRound);
    }

    #[test]
    fn breathing_times_out() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::Off);
        let fx = m.advance(SessionEvent::StartPressed, 0).unwrap();
        let (id, _) = timer_of(&fx);
        m.advance(SessionEvent::TimerElapsed(id), 30_000).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Countdown(3));
    }

    #[test]
    fn round_with_two_pitches_and_reveal() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::TwoPitch);
        let (id, _) = to_await(&mut m);
        let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::FirstPitch);
        assert_eq!(fx[0], Effect::PlayFirstPitch);

        let plan = m.current_plan().unwrap().clone();
        assert_eq!(plan.hands.len(), 2);
        let (id, _) = timer_of(&fx);
        let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Actuating);
        let actuations: Vec<_> = fx
            .iter()
            .filter_map(|e| match e {
                Effect::SendActuate {
                    hand,
                    channel,
                    duration_ms,
                } => Some((*hand, *channel, *duration_ms)),
                _ => None,
            })
            .collect();
        let expected: Vec<_> = plan
            .hands
            .iter()
            .filter_map(|h| h.channel.map(|c| (h.side, c, 2000)))
            .collect();
        assert_eq!(actuations, expected);
        let pitches = fx
            .iter()
            .filter(|e| matches!(e, Effect::PlaySecondPitch { .. }))
            .count();
        assert_eq!(pitches, 2);
        assert_eq!(timer_of(&fx).1, 2000);

        let (id, _) = timer_of(&fx);
        let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::InterpretWindow);
        assert!(matches!(
            &fx[0],
            Effect::AppendLog {
                note: SessionNote::RoundResolved { .. }
            }
        ));

        let fx = m.advance(SessionEvent::RevealPressed, 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Revealed);
        let result = m.last_result().unwrap().clone();
        let (hide, _) = timer_of(&fx);
        assert_eq!(
            fx,
            vec![
                Effect::ShowResult {
                    result,
                    duration_ms: 2000
                },
                Effect::ArmTimer { id: hide, ms: 2000 },
            ]
        );
        let fx = m.advance(SessionEvent::TimerElapsed(hide), 0).unwrap();
        assert_eq!(fx[0], Effect::HideResult);
        assert_eq!(*m.phase(), SessionPhase::AwaitRound);
    }

    #[test]
    fn sound_off_skips_first_pitch() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::Off);
        let (id, _) = to_await(&mut m);
        let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Actuating);
        assert!(!fx
            .iter()
            .any(|e| matches!(e, Effect::PlayFirstPitch | Effect::PlaySecondPitch { .. })));
    }

    #[test]
    fn first_pitch_only_mode() {
        let mut m = machine(
            GameKind::Godai,
            GameMode::BestOf3,
            SoundMode::FirstPitchOnly,
        );
        let (id, _) = to_await(&mut m);
        let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert_eq!(fx[0], Effect::PlayFirstPitch);
        let (id, _) = timer_of(&fx);
        let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert!(!fx
            .iter()
            .any(|e| matches!(e, Effect::PlaySecondPitch { .. })));
    }

    #[test]
    fn rejected_event_leaves_state_untouched() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::TwoPitch);
        let before = m.clone();
        let err = m.advance(SessionEvent::RevealPressed, 0).unwrap_err();
        assert!(matches!(err, ControlError::InvalidEvent { .. }));
        assert_eq!(m, before);
        assert!(m.advance(SessionEvent::SkipBreathing, 0).is_err());
        assert!(m
            .advance(SessionEvent::VoiceCommand(VoiceCommand::Resume), 0)
            .is_err());
        assert_eq!(m, before);
    }

    #[test]
    fn stale_timers_are_ignored() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::TwoPitch);
        let fx = m.advance(SessionEvent::StartPressed, 0).unwrap();
        let (breathing, _) = timer_of(&fx);
        m.advance(SessionEvent::SkipBreathing, 0).unwrap();
        let before = m.clone();
        assert_eq!(
            m.advance(SessionEvent::TimerElapsed(breathing), 0).unwrap(),
            vec![]
        );
        assert_eq!(m.phase(), before.phase());
    }

    #[test]
    fn pause_stops_devices_and_resume_restarts_countdown() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::Off);
        let (id, _) = to_await(&mut m);
        m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Actuating);
        let fx = m
            .advance(SessionEvent::VoiceCommand(VoiceCommand::Pause), 0)
            .unwrap();
        assert_eq!(
            fx,
            vec![
                Effect::SendStopAll,
                Effect::AppendLog {
                    note: SessionNote::Paused
                }
            ]
        );
        assert!(m.current_plan().is_none());
        assert!(m.armed_timers().is_empty());
        let fx = m
            .advance(SessionEvent::VoiceCommand(VoiceCommand::Resume), 0)
            .unwrap();
        assert_eq!(
            fx[0],
            Effect::AppendLog {
                note: SessionNote::Resumed
            }
        );
        assert_eq!(*m.phase(), SessionPhase::Countdown(3));
        assert_eq!(m.rounds_played(), 0);
    }

    #[test]
    fn pause_in_breathing_resumes_breathing() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::Off);
        m.advance(SessionEvent::StartPressed, 0).unwrap();
        m.advance(SessionEvent::VoiceCommand(VoiceCommand::Pause), 0)
            .unwrap();
        assert!(m
            .advance(SessionEvent::VoiceCommand(VoiceCommand::Pause), 0)
            .is_err());
        m.advance(SessionEvent::VoiceCommand(VoiceCommand::Resume), 0)
            .unwrap();
        assert_eq!(*m.phase(), SessionPhase::Breathing);
    }

    #[test]
    fn kill_switch_forces_safe_off_from_anywhere() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::TwoPitch);
        let (id, _) = to_await(&mut m);
        m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
        let fx = m.advance(SessionEvent::KillSwitch(Side::Left), 0).unwrap();
        assert_eq!(
            fx,
            vec![
                Effect::SendStopAll,
                Effect::AppendLog {
                    note: SessionNote::KillSwitch { hand: Side::Left }
                },
            ]
        );
        assert_eq!(*m.phase(), SessionPhase::SafeOff);
        assert!(m.advance(SessionEvent::StartPressed, 0).is_err());
        assert!(m
            .advance(SessionEvent::VoiceCommand(VoiceCommand::Resume), 0)
            .is_err());
    }

    #[test]
    fn stop_goes_safe_off() {
        let mut m = machine(GameKind::Idio, GameMode::FreePlay, SoundMode::TwoPitch);
        m.advance(SessionEvent::StartPressed, 0).unwrap();
        assert_eq!(
            m.advance(SessionEvent::VoiceCommand(VoiceCommand::Stop), 0)
                .unwrap(),
            vec![Effect::SendStopAll]
        );
        assert_eq!(*m.phase(), SessionPhase::SafeOff);
    }

    #[test]
    fn usage_limit_notifies_once() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::TwoPitch);
        let fx = m.advance(SessionEvent::UsageLimitReached, 0).unwrap();
        assert_eq!(
            fx,
            vec![
                Effect::NotifyUsageLimit,
                Effect::AppendLog {
                    note: SessionNote::UsageLimit
                }
            ]
        );
        assert!(m
            .advance(SessionEvent::UsageLimitReached, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn epta_plans_only_the_turn_hand() {
        let rules = GameRules::default();
        let mut rng = SessionRng::new(3);
        let game = GameState::new(GameKind::Epta, GameMode::FreePlay, &rules, 2);
        let plan = plan_round(&game, &mut rng).unwrap();
        assert_eq!(plan.hands.len(), 1);
        assert_eq!(plan.hands[0].side, Side::Right);
    }

    #[test]
    fn open_palm_is_never_actuated() {
        // Scan seeds until a round draws an open palm.
        for seed in 0..200 {
            let mut m = SessionMachine::new(
                LoopSetup::new(GameKind::Godai, GameMode::BestOf3, SoundMode::Off),
                GameRules::default(),
                seed,
            );
            let (id, _) = to_await(&mut m);
            let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
            let plan = m.current_plan().unwrap();
            if let Some(palm) = plan.hands.iter().find(|h| h.gesture == Gesture::OpenPalm) {
                assert!(palm.channel.is_none());
                assert!(!fx
                    .iter()
                    .any(|e| matches!(e, Effect::SendActuate { hand, .. } if *hand == palm.side)));
                return;
            }
        }
        panic!("no open palm drawn in 200 seeds");
    }

    #[test]
    fn godai_runs_to_completion_and_restarts() {
        let mut m = machine(GameKind::Godai, GameMode::BestOf3, SoundMode::Off);
        let (mut id, _) = to_await(&mut m);
        let mut guard = 0;
        while *m.phase() != SessionPhase::Completed {
            let fx = m.advance(SessionEvent::TimerElapsed(id), 0).unwrap();
            if *m.phase() == SessionPhase::Completed {
                break;
            }
            id = timer_of(&fx).0;
            guard += 1;
            assert!(guard < 10_000);
        }
        match m.last_result() {
            Some(RoundResult::Godai {
                match_winner,
                outcome,
                ..
            }) => {
                assert!(match_winner.is_some());
                assert_ne!(*outcome, RoundOutcome::Tie);
            }
            other => panic!("unexpected {other:?}"),
        }
        m.advance(SessionEvent::StartPressed, 0).unwrap();
        assert_eq!(*m.phase(), SessionPhase::Breathing);
        assert!(!m.game().is_finished());
    }
}
