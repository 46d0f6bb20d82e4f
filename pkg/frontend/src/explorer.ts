import { RenderClient } from "./api.js";
import { RenderScheduler, type Timers } from "./scheduler.js";
import { clampControlState, defaultControlState } from "./state.js";
import type {
  ControlState,
  RenderView,
  SessionMeta,
  SweepResult,
} from "./types.js";

export interface ExplorerOptions {
  debounceMs?: number;
  timers?: Timers;
}

/** Headless controller for the defocus explorer: owns the session, the
 * control state, and the render scheduling. The DOM layer only forwards
 * input events and paints whatever `onDisplay` hands it. */
export class DefocusExplorer {
  private meta_: SessionMeta | null = null;
  private controls_: ControlState | null = null;
  private scheduler: RenderScheduler<ControlState, Omit<RenderView, "seq">>;
  private display_: RenderView | null = null;

  onDisplay: ((view: RenderView) => void) | null = null;
  onError: ((error: unknown) => void) | null = null;

  constructor(
    private readonly client: RenderClient,
    options: ExplorerOptions = {},
  ) {
    this.scheduler = new RenderScheduler(
      (state) => this.client.render(this.sessionId, state),
      options.debounceMs ?? 150,
      options.timers,
    );
    this.scheduler.onResult = (result, state, seq) => {
      this.display_ = { ...result, state, seq };
      this.onDisplay?.(this.display_);
    };
    this.scheduler.onError = (error) => this.onError?.(error);
  }

  get meta(): SessionMeta | null {
    return this.meta_;
  }

  get controls(): ControlState | null {
    return this.controls_;
  }

  get display(): RenderView | null {
    return this.display_;
  }

  get sessionId(): string {
    if (!this.meta_) throw new Error("no session loaded");
    return this.meta_.sessionId;
  }

  /** Upload the scene; controls become enabled once this resolves. */
  async loadSession(
    image: Blob,
    depth: Blob,
    saliency?: Blob,
  ): Promise<SessionMeta> {
    this.meta_ = await this.client.createSession(image, depth, saliency);
    this.controls_ = defaultControlState(this.meta_);
    return this.meta_;
  }

  /** Apply a partial control change; schedules a debounced re-render. */
  setControls(change: Partial<ControlState>): ControlState {
    if (!this.meta_ || !this.controls_) throw new Error("no session loaded");
    this.controls_ = clampControlState(
      { ...this.controls_, ...change },
      this.meta_,
      this.controls_,
    );
    this.scheduler.request(this.controls_);
    return this.controls_;
  }

  /** Resolves when no render is pending or in flight. */
  settle(): Promise<void> {
    return this.scheduler.idle();
  }

  runSweep(): Promise<SweepResult> {
    if (!this.controls_) throw new Error("no session loaded");
    return this.client.sweep(this.sessionId, this.controls_);
  }
}
