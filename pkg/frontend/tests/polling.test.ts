import { describe, expect, it } from 'vitest';

import { JobFailedError, pollJob } from '../src/polling';
import type { JobTicket } from '../src/types';

function ticket(status: JobTicket['status'], progress = 0): JobTicket {
  return { id: 'j1', session_id: 's1', stage: 'compose', status, progress, error: status === 'failed' ? 'boom' : null };
}

describe('pollJob', () => {
  it('resolves once the job succeeds', async () => {
    const sequence = [ticket('queued'), ticket('running', 0.5), ticket('succeeded', 1)];
    let i = 0;
    const result = await pollJob(async () => sequence[Math.min(i++, 2)], 'j1', {
      intervalMs: 1,
    });
    expect(result.status).toBe('succeeded');
    expect(i).toBe(3);
  });

  it('rejects with the stage-labeled error on failure', async () => {
    await expect(
      pollJob(async () => ticket('failed'), 'j1', { intervalMs: 1 }),
    ).rejects.toThrow(JobFailedError);
  });

  it('reports progress along the way', async () => {
    const sequence = [ticket('running', 0.2), ticket('running', 0.7), ticket('succeeded', 1)];
    let i = 0;
    const seen: number[] = [];
    await pollJob(async () => sequence[Math.min(i++, 2)], 'j1', {
      intervalMs: 1,
      onProgress: (t) => seen.push(t.progress),
    });
    expect(seen).toEqual([0.2, 0.7, 1]);
  });

  it('times out when the job never settles', async () => {
    await expect(
      pollJob(async () => ticket('running', 0.1), 'j1', { intervalMs: 1, timeoutMs: 20 }),
    ).rejects.toThrow(/timed out/);
  });
});
